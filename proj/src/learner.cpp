#include "metacal/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "metacal/errors.hpp"
#include "metacal/rng.hpp"

namespace metacal {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double log1pexp(double z) {
    if (z > 35.0) return z;
    if (z < -35.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

void check_xy(const Eigen::MatrixXd& X, const std::vector<int>& y) {
    if (static_cast<std::size_t>(X.rows()) != y.size() || y.empty()) {
        throw DataError("logistic: X rows and y length must match and be nonzero");
    }
    if (!X.allFinite()) throw DataError("logistic: non-finite feature values");
    bool has0 = false, has1 = false;
    for (int v : y) {
        if (v == 0) has0 = true;
        else if (v == 1) has1 = true;
        else throw DataError("logistic: labels must be 0/1");
    }
    if (!has0 || !has1) throw DataError("logistic: need both classes present");
}

}  // namespace

double LogisticModel::predict_prob(const Eigen::VectorXd& x) const {
    double z = intercept;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
        z += weights(j) * (x(j) - feature_mean(j)) / feature_sd(j);
    }
    return sigmoid(z);
}

Eigen::VectorXd LogisticModel::predict_probs(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_prob(X.row(i));
    return out;
}

double logistic_loss(const Eigen::MatrixXd& X, const std::vector<int>& y,
                     const Eigen::VectorXd& w, double b, double c) {
    const double n = static_cast<double>(X.rows());
    double nll = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double z = X.row(i).dot(w) + b;
        // -log p(y|z) = log(1+exp(z)) - y z
        nll += log1pexp(z) - (y[i] ? z : 0.0);
    }
    return nll / n + w.squaredNorm() / (2.0 * c * n);
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                  const Eigen::VectorXd& w, double b, double c) {
    const double n = static_cast<double>(X.rows());
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(w.size() + 1);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double p = sigmoid(X.row(i).dot(w) + b);
        const double r = p - (y[i] ? 1.0 : 0.0);
        grad.head(w.size()) += r * X.row(i).transpose();
        grad(w.size()) += r;
    }
    grad /= n;
    grad.head(w.size()) += w / (c * n);
    return grad;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& y, double c,
                           int max_iterations, double tol) {
    check_xy(X, y);
    if (c <= 0.0) throw DataError("logistic: c must be positive");
    const Eigen::Index p = X.cols();
    const double n = static_cast<double>(X.rows());

    LogisticModel model;
    model.regularization_c = c;
    model.feature_mean = X.colwise().mean();
    model.feature_sd.resize(p);
    Eigen::MatrixXd Z(X.rows(), p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = model.feature_mean(j);
        double var = 0.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            var += (X(i, j) - mean) * (X(i, j) - mean);
        }
        var /= n;
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        model.feature_sd(j) = sd;
        Z.col(j) = (X.col(j).array() - mean) / sd;
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    double b = 0.0;
    double loss = logistic_loss(Z, y, w, b, c);

    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::VectorXd grad = logistic_gradient(Z, y, w, b, c);
        model.final_grad_norm = grad.norm();
        model.iterations = iter;
        if (model.final_grad_norm <= tol) {
            model.weights = w;
            model.intercept = b;
            return model;
        }

        // Newton system over [w; b].
        Eigen::VectorXd d(Z.rows());
        for (Eigen::Index i = 0; i < Z.rows(); ++i) {
            const double prob = sigmoid(Z.row(i).dot(w) + b);
            d(i) = prob * (1.0 - prob);
        }
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p + 1, p + 1);
        H.topLeftCorner(p, p) = (Z.transpose() * d.asDiagonal() * Z) / n;
        H.topLeftCorner(p, p) += Eigen::MatrixXd::Identity(p, p) / (c * n);
        H.topRightCorner(p, 1) = (Z.transpose() * d) / n;
        H.bottomLeftCorner(1, p) = H.topRightCorner(p, 1).transpose();
        H(p, p) = d.sum() / n;

        Eigen::VectorXd step;
        double mu = 0.0;
        for (;;) {
            // Levenberg damping when the system is ill-conditioned.
            Eigen::MatrixXd Hmu = H + mu * Eigen::MatrixXd::Identity(p + 1, p + 1);
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Hmu);
            if (ldlt.info() == Eigen::Success) {
                step = ldlt.solve(grad);
                if (step.allFinite()) break;
            }
            mu = mu == 0.0 ? 1e-8 : mu * 10.0;
            if (mu > 1e6) throw NumericalError("fit_logistic: Newton system not solvable");
        }

        // Backtracking keeps the loss monotone non-increasing.
        double scale = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            const Eigen::VectorXd w_try = w - scale * step.head(p);
            const double b_try = b - scale * step(p);
            const double loss_try = logistic_loss(Z, y, w_try, b_try, c);
            if (loss_try <= loss) {
                w = w_try;
                b = b_try;
                loss = loss_try;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            // Flat to machine precision; accept current point if gradient is
            // already tiny, else keep iterating on the damped system.
            if (model.final_grad_norm <= 1e-5) {
                model.weights = w;
                model.intercept = b;
                return model;
            }
        }
    }
    throw NumericalError("fit_logistic: no convergence after " + std::to_string(max_iterations) +
                         " iterations, gradient norm " + std::to_string(
                             logistic_gradient(Z, y, w, b, c).norm()));
}

CvResult grouped_cv(const Eigen::MatrixXd& X, const std::vector<int>& y,
                    const std::vector<std::string>& groups, int k, double c,
                    std::optional<std::uint64_t> shuffle_seed) {
    check_xy(X, y);
    if (groups.size() != y.size()) throw DataError("grouped_cv: groups length mismatch");
    if (k < 2) throw DataError("grouped_cv: k must be >= 2");

    std::map<std::string, std::vector<std::size_t>> by_group;
    for (std::size_t i = 0; i < groups.size(); ++i) by_group[groups[i]].push_back(i);
    if (static_cast<int>(by_group.size()) < k) {
        throw DataError("grouped_cv: need at least k distinct groups");
    }

    // Default fold assignment is deterministic without a seed: groups by
    // descending size, ties by id, dealt round-robin. With a seed, the
    // groups are dealt in seeded-shuffle order instead.
    std::vector<std::pair<std::string, std::size_t>> group_sizes;
    for (const auto& [g, idx] : by_group) group_sizes.push_back({g, idx.size()});
    if (shuffle_seed) {
        Rng rng = Rng::substream(*shuffle_seed, {0x67726f7570ULL});
        rng.shuffle(group_sizes);
    } else {
        std::sort(group_sizes.begin(), group_sizes.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
    }
    std::map<std::string, int> fold_of;
    for (std::size_t i = 0; i < group_sizes.size(); ++i) {
        fold_of[group_sizes[i].first] = static_cast<int>(i % k);
    }

    CvResult result;
    result.out_of_fold_probs.assign(y.size(), std::numeric_limits<double>::quiet_NaN());
    result.fold_assignment.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) result.fold_assignment[i] = fold_of[groups[i]];

    std::size_t scored = 0;
    for (int fold = 0; fold < k; ++fold) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < y.size(); ++i) {
            (result.fold_assignment[i] == fold ? test_idx : train_idx).push_back(i);
        }
        if (test_idx.empty()) continue;
        bool has0 = false, has1 = false;
        for (std::size_t i : train_idx) (y[i] ? has1 : has0) = true;
        if (!has0 || !has1) {
            result.fold_errors.push_back("fold " + std::to_string(fold) +
                                         ": training data single-class; fold skipped");
            continue;
        }
        Eigen::MatrixXd X_train(train_idx.size(), X.cols());
        std::vector<int> y_train(train_idx.size());
        for (std::size_t r = 0; r < train_idx.size(); ++r) {
            X_train.row(r) = X.row(train_idx[r]);
            y_train[r] = y[train_idx[r]];
        }
        const LogisticModel model = fit_logistic(X_train, y_train, c);
        for (std::size_t i : test_idx) {
            result.out_of_fold_probs[i] = model.predict_prob(X.row(i));
            ++scored;
        }
    }
    result.coverage = static_cast<double>(scored) / static_cast<double>(y.size());

    std::vector<double> probs;
    std::vector<int> labels;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isnan(result.out_of_fold_probs[i])) {
            probs.push_back(result.out_of_fold_probs[i]);
            labels.push_back(y[i]);
        }
    }
    result.auc = roc_auc(probs, labels);
    return result;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw DataError("roc_auc: scores and labels must match and be nonempty");
    }
    std::int64_t n_pos = 0, n_neg = 0;
    for (int v : labels) {
        if (v == 1) ++n_pos;
        else if (v == 0) ++n_neg;
        else throw DataError("roc_auc: labels must be 0/1");
    }
    if (n_pos == 0 || n_neg == 0) throw DataError("roc_auc: need both classes present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks over tie groups; rank sums of half-integers stay exact.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) {
            if (labels[order[t]] == 1) rank_sum_pos += midrank;
        }
        i = j + 1;
    }
    const double numer =
        rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return numer / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

TransferResult transfer_matrix(const std::vector<std::pair<std::string, Dataset>>& datasets,
                               int k, double c) {
    if (datasets.size() < 2) throw DataError("transfer_matrix: need at least 2 benchmarks");
    const std::vector<std::string>& schema = datasets.front().second.feature_names;
    for (const auto& [name, ds] : datasets) {
        if (ds.feature_names != schema) {
            throw DataError("transfer_matrix: feature schema mismatch for " + name);
        }
    }

    TransferResult result;
    const int n = static_cast<int>(datasets.size());
    result.auc = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [name, ds] : datasets) result.benchmarks.push_back(name);

    for (int row = 0; row < n; ++row) {
        const Dataset& train = datasets[row].second;
        const LogisticModel model = fit_logistic(train.X, train.y, c);
        for (int col = 0; col < n; ++col) {
            if (col == row) {
                result.auc(row, col) = grouped_cv(train.X, train.y, train.groups, k, c).auc;
                continue;
            }
            const Dataset& test = datasets[col].second;
            const Eigen::VectorXd probs = model.predict_probs(test.X);
            std::vector<double> scores(probs.data(), probs.data() + probs.size());
            result.auc(row, col) = roc_auc(scores, test.y);
        }
    }
    return result;
}

}  // namespace metacal
