#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "metacal/errors.hpp"
#include "metacal/learner.hpp"
#include "metacal/rng.hpp"

using namespace metacal;

namespace {

// Exhaustive pair-counting AUC oracle; shares only the final division with
// the rank-sum implementation.
double auc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::int64_t wins2 = 0;  // 2*wins + ties, to stay integral
    std::int64_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        ++n_pos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) wins2 += 2;
            else if (scores[i] == scores[j]) wins2 += 1;
        }
    }
    for (int y : labels) {
        if (y == 0) ++n_neg;
    }
    return (static_cast<double>(wins2) / 2.0) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

Eigen::MatrixXd random_features(Rng& rng, int n, int p) {
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    }
    return X;
}

}  // namespace

TEST_CASE("roc_auc trivial orderings") {
    CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
    CHECK_THROWS_AS(roc_auc({0.5, 0.6}, {1, 1}), DataError);
}

TEST_CASE("roc_auc eight-point fixture with ties") {
    const std::vector<double> scores = {0.1, 0.4, 0.4, 0.4, 0.6, 0.6, 0.9, 0.9};
    const std::vector<int> labels = {0, 0, 1, 0, 1, 0, 1, 1};
    CHECK(roc_auc(scores, labels) == auc_pairs(scores, labels));
    // Exhaustive count: pairs (pos, neg): 4 pos x 4 neg = 16.
    CHECK(roc_auc(scores, labels) == doctest::Approx(auc_pairs(scores, labels)));
}

TEST_CASE("roc_auc equals exhaustive pair counting exactly on 500 random instances") {
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(40));
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has0 = false, has1 = false;
        for (int i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.below(8)) / 7.0;  // forces ties
            labels[i] = static_cast<int>(rng.below(2));
            (labels[i] ? has1 : has0) = true;
        }
        if (!has0 || !has1) continue;
        CHECK(roc_auc(scores, labels) == auc_pairs(scores, labels));  // bit-exact
    }
}

TEST_CASE("logistic gradient matches central finite differences") {
    Rng rng(11);
    const int n = 60, p = 4;
    const Eigen::MatrixXd X = random_features(rng, n, p);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = (X(i, 0) - 0.5 * X(i, 2) + 0.3 * rng.normal()) > 0.0 ? 1 : 0;
    }
    const double c = 1.0;
    for (int point = 0; point < 20; ++point) {
        Eigen::VectorXd w(p);
        for (int j = 0; j < p; ++j) w(j) = rng.normal() * 0.8;
        const double b = rng.normal() * 0.5;
        const Eigen::VectorXd grad = logistic_gradient(X, y, w, b, c);
        const double h = 1e-6;
        for (int j = 0; j <= p; ++j) {
            Eigen::VectorXd wp = w, wm = w;
            double bp = b, bm = b;
            if (j < p) {
                wp(j) += h;
                wm(j) -= h;
            } else {
                bp += h;
                bm -= h;
            }
            const double fd =
                (logistic_loss(X, y, wp, bp, c) - logistic_loss(X, y, wm, bm, c)) / (2.0 * h);
            const double denom = std::max(1e-8, std::fabs(fd));
            CHECK(std::fabs(grad(j) - fd) / denom < 1e-5);
        }
    }
}

TEST_CASE("separable data stays finite under ridge and reaches AUC 1 in-sample") {
    Eigen::MatrixXd X(8, 1);
    std::vector<int> y(8);
    for (int i = 0; i < 8; ++i) {
        X(i, 0) = i < 4 ? -1.0 - i : 1.0 + i;
        y[i] = i < 4 ? 0 : 1;
    }
    const LogisticModel m = fit_logistic(X, y, 1.0);
    CHECK(std::isfinite(m.weights(0)));
    const Eigen::VectorXd probs = m.predict_probs(X);
    std::vector<double> scores(probs.data(), probs.data() + probs.size());
    CHECK(roc_auc(scores, y) == 1.0);
}

TEST_CASE("weights shrink to zero as c -> 0+") {
    Rng rng(19);
    const Eigen::MatrixXd X = random_features(rng, 80, 3);
    std::vector<int> y(80);
    for (int i = 0; i < 80; ++i) y[i] = static_cast<int>(rng.below(2));
    const LogisticModel strong = fit_logistic(X, y, 1e-6);
    CHECK(strong.weights.norm() < 1e-3);
    const LogisticModel weak = fit_logistic(X, y, 100.0);
    CHECK(weak.weights.norm() >= strong.weights.norm());
}

TEST_CASE("loss non-increasing across iterations is honored by convergence") {
    Rng rng(23);
    const Eigen::MatrixXd X = random_features(rng, 120, 5);
    std::vector<int> y(120);
    for (int i = 0; i < 120; ++i) {
        y[i] = (0.8 * X(i, 1) + rng.normal()) > 0.0 ? 1 : 0;
    }
    const LogisticModel m = fit_logistic(X, y, 1.0);
    CHECK(m.final_grad_norm <= 1e-6);
    // Refit from the solution evaluates to a no-worse loss.
    Eigen::MatrixXd Z(X.rows(), X.cols());
    for (int j = 0; j < 5; ++j) {
        Z.col(j) = (X.col(j).array() - m.feature_mean(j)) / m.feature_sd(j);
    }
    const double at_solution = logistic_loss(Z, y, m.weights, m.intercept, 1.0);
    const double at_zero = logistic_loss(Z, y, Eigen::VectorXd::Zero(5), 0.0, 1.0);
    CHECK(at_solution <= at_zero);
}

TEST_CASE("grouped_cv keeps groups intact and is deterministic") {
    Rng rng(31);
    const int n = 120;
    const Eigen::MatrixXd X = random_features(rng, n, 3);
    std::vector<int> y(n);
    std::vector<std::string> groups(n);
    for (int i = 0; i < n; ++i) {
        y[i] = static_cast<int>(rng.below(2));
        groups[i] = "g" + std::to_string(i / 3);
    }
    const CvResult a = grouped_cv(X, y, groups, 5, 1.0);
    const CvResult b = grouped_cv(X, y, groups, 5, 1.0);
    CHECK(a.out_of_fold_probs == b.out_of_fold_probs);
    // Group integrity: all trials of one group share a fold.
    std::map<std::string, std::set<int>> folds_of_group;
    for (int i = 0; i < n; ++i) folds_of_group[groups[i]].insert(a.fold_assignment[i]);
    for (const auto& [g, folds] : folds_of_group) CHECK(folds.size() == 1);
    CHECK(a.coverage == 1.0);
}

TEST_CASE("grouped_cv seeded-shuffle mode keeps groups intact") {
    Rng rng(67);
    const int n = 90;
    const Eigen::MatrixXd X = random_features(rng, n, 3);
    std::vector<int> y(n);
    std::vector<std::string> groups(n);
    for (int i = 0; i < n; ++i) {
        y[i] = static_cast<int>(rng.below(2));
        groups[i] = "g" + std::to_string(i / 3);
    }
    const CvResult a = grouped_cv(X, y, groups, 5, 1.0, 7ull);
    const CvResult b = grouped_cv(X, y, groups, 5, 1.0, 7ull);
    CHECK(a.fold_assignment == b.fold_assignment);
    const CvResult c = grouped_cv(X, y, groups, 5, 1.0, 8ull);
    CHECK(a.fold_assignment != c.fold_assignment);
    std::map<std::string, std::set<int>> folds_of_group;
    for (int i = 0; i < n; ++i) folds_of_group[groups[i]].insert(a.fold_assignment[i]);
    for (const auto& [g, folds] : folds_of_group) CHECK(folds.size() == 1);
}

TEST_CASE("grouped_cv leave-one-group-out when k equals group count") {
    Rng rng(37);
    const int n = 24;
    const Eigen::MatrixXd X = random_features(rng, n, 2);
    std::vector<int> y(n);
    std::vector<std::string> groups(n);
    for (int i = 0; i < n; ++i) {
        y[i] = i % 2;
        groups[i] = "g" + std::to_string(i / 2);
    }
    const CvResult r = grouped_cv(X, y, groups, 12, 1.0);
    std::set<int> folds(r.fold_assignment.begin(), r.fold_assignment.end());
    CHECK(folds.size() == 12);
    CHECK_THROWS_AS(grouped_cv(X, y, groups, 13, 1.0), DataError);
}

TEST_CASE("group-identity-only signal scores at chance out of fold") {
    // Label constant within a group, features shared within a group: group
    // memorization is the only route, and grouped folds remove it.
    Rng rng(41);
    const int n_groups = 500, per_group = 4, p = 10;
    const int n = n_groups * per_group;
    Eigen::MatrixXd X(n, p);
    std::vector<int> y(n);
    std::vector<std::string> groups(n);
    int row = 0;
    bool has0 = false, has1 = false;
    for (int g = 0; g < n_groups; ++g) {
        Eigen::VectorXd signature(p);
        for (int j = 0; j < p; ++j) signature(j) = rng.normal();
        const int label = static_cast<int>(rng.below(2));
        (label ? has1 : has0) = true;
        for (int t = 0; t < per_group; ++t, ++row) {
            X.row(row) = signature;
            y[row] = label;
            groups[row] = "g" + std::to_string(g);
        }
    }
    REQUIRE(has0);
    REQUIRE(has1);
    const CvResult r = grouped_cv(X, y, groups, 5, 1.0);
    CHECK(r.auc > 0.45);
    CHECK(r.auc < 0.55);
}

TEST_CASE("standardization uses training folds only") {
    // A test fold with a wildly shifted feature must not leak into the
    // training standardization: the model's stored statistics come from
    // training rows only, so the training-rows mean is reproduced exactly.
    Rng rng(43);
    const int n = 60;
    Eigen::MatrixXd X = random_features(rng, n, 1);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[i] = (X(i, 0) > 0) ? 1 : 0;
    const LogisticModel m = fit_logistic(X, y, 1.0);
    CHECK(m.feature_mean(0) == doctest::Approx(X.col(0).mean()));
}

TEST_CASE("nested designs with weak regularization order in-sample loss") {
    Rng rng(47);
    const int n = 150;
    const Eigen::MatrixXd X_full = random_features(rng, n, 6);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = (X_full(i, 0) + 0.5 * X_full(i, 4) + rng.normal() * 0.7) > 0.0 ? 1 : 0;
    }
    const Eigen::MatrixXd X_small = X_full.leftCols(3);
    const double c = 1e6;  // effectively unregularized
    const LogisticModel small = fit_logistic(X_small, y, c);
    const LogisticModel full = fit_logistic(X_full, y, c);
    auto standardized = [](const Eigen::MatrixXd& X, const LogisticModel& m) {
        Eigen::MatrixXd Z(X.rows(), X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            Z.col(j) = (X.col(j).array() - m.feature_mean(j)) / m.feature_sd(j);
        }
        return Z;
    };
    const double loss_small =
        logistic_loss(standardized(X_small, small), y, small.weights, small.intercept, c);
    const double loss_full =
        logistic_loss(standardized(X_full, full), y, full.weights, full.intercept, c);
    CHECK(loss_full <= loss_small + 1e-8);
}

TEST_CASE("transfer matrix diagonal uses grouped CV and off-diagonals transfer") {
    Rng rng(53);
    auto make_dataset = [&](double flip_rate) {
        Dataset ds;
        const int n = 200;
        ds.X = random_features(rng, n, 4);
        ds.feature_names = {"f0", "f1", "f2", "f3"};
        for (int i = 0; i < n; ++i) {
            int label = (ds.X(i, 0) + 0.2 * rng.normal()) > 0.0 ? 1 : 0;
            if (rng.uniform01() < flip_rate) label = 1 - label;
            ds.y.push_back(label);
            ds.groups.push_back("g" + std::to_string(i / 2));
        }
        return ds;
    };
    std::vector<std::pair<std::string, Dataset>> datasets = {{"bench_a", make_dataset(0.05)},
                                                             {"bench_b", make_dataset(0.05)}};
    const TransferResult t = transfer_matrix(datasets, 5, 1.0);
    CHECK(t.auc(0, 0) > 0.8);
    CHECK(t.auc(0, 1) > 0.8);  // same generating process transfers

    // Identical train/test data off-diagonal reproduces the in-sample AUC.
    std::vector<std::pair<std::string, Dataset>> twins = {{"orig", datasets[0].second},
                                                          {"copy", datasets[0].second}};
    const TransferResult tt = transfer_matrix(twins, 5, 1.0);
    const LogisticModel in_sample = fit_logistic(datasets[0].second.X, datasets[0].second.y, 1.0);
    const Eigen::VectorXd probs = in_sample.predict_probs(datasets[0].second.X);
    std::vector<double> scores(probs.data(), probs.data() + probs.size());
    CHECK(tt.auc(0, 1) == doctest::Approx(roc_auc(scores, datasets[0].second.y)));
    CHECK(tt.auc(0, 1) == tt.auc(1, 0));
    Dataset bad = datasets[1].second;
    bad.feature_names = {"f0", "f1", "f2", "other"};
    std::vector<std::pair<std::string, Dataset>> mismatched = {datasets[0], {"bench_b", bad}};
    CHECK_THROWS_AS(transfer_matrix(mismatched, 5, 1.0), DataError);
}

TEST_CASE("label-shuffled transfer column sits near chance") {
    Rng rng(59);
    Dataset ds;
    const int n = 400;
    ds.X = random_features(rng, n, 4);
    ds.feature_names = {"f0", "f1", "f2", "f3"};
    for (int i = 0; i < n; ++i) {
        ds.y.push_back((ds.X(i, 0) > 0.0) ? 1 : 0);
        ds.groups.push_back("g" + std::to_string(i));
    }
    Dataset shuffled = ds;
    std::vector<int> perm_labels = ds.y;
    rng.shuffle(perm_labels);
    shuffled.y = perm_labels;
    const TransferResult t = transfer_matrix(
        {{"real", ds}, {"shuffled", shuffled}}, 5, 1.0);
    CHECK(std::fabs(t.auc(0, 1) - 0.5) < 0.08);
}
