#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "metacal/corpus.hpp"
#include "metacal/errors.hpp"
#include "metacal/spectra.hpp"
#include "metacal/synth.hpp"
#include "metacal/tetra.hpp"

using namespace metacal;

namespace {

TetrachoricMatrix corr_from(const Eigen::MatrixXd& rho) {
    TetrachoricMatrix t;
    const int n = static_cast<int>(rho.rows());
    for (int i = 0; i < n; ++i) t.model_ids.push_back("m" + std::to_string(i));
    t.rho = rho;
    t.thresholds.assign(n, 0.0);
    t.n_pairs = Eigen::MatrixXi::Constant(n, n, 100);
    t.clamped.setZero(n, n);
    t.missing.setZero(n, n);
    return t;
}

}  // namespace

TEST_CASE("eigenspectrum of the identity") {
    const SpectrumReport s = eigenspectrum(corr_from(Eigen::MatrixXd::Identity(5, 5)));
    for (double v : s.normalized) CHECK(v == doctest::Approx(0.2));
    CHECK(s.cumulative.back() == doctest::Approx(1.0));
}

TEST_CASE("eigenspectrum rank-one all-ones matrix") {
    const SpectrumReport s = eigenspectrum(corr_from(Eigen::MatrixXd::Ones(4, 4)));
    CHECK(s.normalized[0] == doctest::Approx(1.0));
    for (int r = 1; r < 4; ++r) CHECK(std::fabs(s.normalized[r]) < 1e-12);
}

TEST_CASE("eigenspectrum 2x2 closed form") {
    Eigen::MatrixXd rho(2, 2);
    rho << 1.0, 0.5, 0.5, 1.0;
    const SpectrumReport s = eigenspectrum(corr_from(rho));
    CHECK(s.eigenvalues[0] == doctest::Approx(1.5));
    CHECK(s.eigenvalues[1] == doctest::Approx(0.5));
    CHECK(s.normalized[0] == doctest::Approx(0.75));
    CHECK(s.normalized[1] == doctest::Approx(0.25));
}

TEST_CASE("eigenspectrum flags negative eigenvalues and zeroes their loadings") {
    Eigen::MatrixXd rho(3, 3);
    rho << 1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0;
    const SpectrumReport s = eigenspectrum(corr_from(rho));
    CHECK(s.negative_flags.back());
    CHECK(s.loadings.col(2).norm() == 0.0);
    // Signed normalized spectrum still sums to one.
    const double sum = std::accumulate(s.normalized.begin(), s.normalized.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("eigenspectrum trace preservation") {
    const SynthData data = generate(PopulationSpec::uniform(8, 400, 0.5, 0.2, 0.0, 0.0, 11));
    const TetrachoricMatrix t = tetrachoric_matrix(data.conf);
    const SpectrumReport s = eigenspectrum(t);
    const double sum = std::accumulate(s.eigenvalues.begin(), s.eigenvalues.end(), 0.0);
    CHECK(std::fabs(sum - t.rho.trace()) < 1e-8);
    // Loading column norms match sqrt(max(lambda, 0)).
    for (int r = 0; r < s.n_ranks(); ++r) {
        const double expect = s.eigenvalues[r] > 0.0 ? s.eigenvalues[r] : 0.0;
        CHECK(s.loadings.col(r).squaredNorm() == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("eigenspectrum rejects missing cells") {
    TetrachoricMatrix t = corr_from(Eigen::MatrixXd::Identity(3, 3));
    t.missing(0, 1) = t.missing(1, 0) = 1;
    CHECK_THROWS_AS(eigenspectrum(t), DataError);
}

TEST_CASE("column shuffle preserves marginals exactly and missingness") {
    SynthData data = generate(PopulationSpec::uniform(6, 200, 0.4, 0.3, 0.0, 0.0, 5));
    // Punch some holes.
    data.conf.set(3, 2, -1);
    data.conf.set(10, 0, -1);
    const JudgementMatrix shuffled = shuffle_columns(data.conf, 9, 0, 0);
    for (std::size_t m = 0; m < data.conf.n_models(); ++m) {
        int yes_before = 0, yes_after = 0, n_before = 0, n_after = 0;
        for (std::size_t i = 0; i < data.conf.n_items(); ++i) {
            CHECK((data.conf.at(i, m) < 0) == (shuffled.at(i, m) < 0));
            if (data.conf.at(i, m) >= 0) {
                ++n_before;
                yes_before += data.conf.at(i, m);
            }
            if (shuffled.at(i, m) >= 0) {
                ++n_after;
                yes_after += shuffled.at(i, m);
            }
        }
        CHECK(yes_before == yes_after);
        CHECK(n_before == n_after);
    }
}

TEST_CASE("parallel_analysis deterministic given seed") {
    const SynthData data = generate(PopulationSpec::uniform(6, 150, 0.4, 0.0, 0.0, 0.0, 3));
    const NullEnvelope a = parallel_analysis(data.conf, 5, 77);
    const NullEnvelope b = parallel_analysis(data.conf, 5, 77);
    CHECK(a.per_rank_q95 == b.per_rank_q95);
    CHECK(a.per_rank_mean == b.per_rank_mean);
    const NullEnvelope c = parallel_analysis(data.conf, 5, 78);
    CHECK(a.per_rank_q95 != c.per_rank_q95);
}

TEST_CASE("null envelope is monotone non-increasing in rank") {
    const SynthData data = generate(PopulationSpec::uniform(8, 200, 0.5, 0.2, 0.0, 0.0, 21));
    const NullEnvelope env = parallel_analysis(data.conf, 20, 4);
    for (std::size_t r = 1; r < env.per_rank_q95.size(); ++r) {
        CHECK(env.per_rank_q95[r] <= env.per_rank_q95[r - 1] + 1e-12);
    }
}

TEST_CASE("independent population stays below the envelope at rank one") {
    // Loadings zero: observed lambda_1 should clear q95 in few seeds.
    int above = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        const SynthData data = generate(
            PopulationSpec::uniform(10, 400, 0.0, 0.0, 0.0, 0.0, 1000 + seed));
        const SpectrumReport s = eigenspectrum(tetrachoric_matrix(data.conf));
        const NullEnvelope env = parallel_analysis(data.conf, 40, 2000 + seed);
        if (s.normalized[0] > env.per_rank_q95[0]) ++above;
    }
    CHECK(above <= 2);  // ~5% expected by construction
}

TEST_CASE("rank-one population is detected as signal") {
    const SynthData data = generate(PopulationSpec::uniform(10, 600, 0.7, 0.0, 0.0, 0.0, 31));
    const SpectrumReport s = eigenspectrum(tetrachoric_matrix(data.conf));
    const NullEnvelope env = parallel_analysis(data.conf, 50, 32);
    const std::vector<RankClass> classes = classify_ranks(s, env);
    CHECK(classes[0] == RankClass::signal);
    int extra_signal = 0;
    for (std::size_t r = 1; r < classes.size(); ++r) {
        if (classes[r] == RankClass::signal) ++extra_signal;
    }
    CHECK(extra_signal <= 1);
}

TEST_CASE("classify_ranks tie and negative rules") {
    SpectrumReport s;
    s.normalized = {0.5, 0.2, -0.05};
    s.eigenvalues = {1.5, 0.6, -0.15};
    s.negative_flags = {false, false, true};
    NullEnvelope env;
    env.per_rank_q95 = {0.3, 0.2, 0.1};
    env.per_rank_mean = {0.2, 0.15, 0.05};
    const std::vector<RankClass> classes = classify_ranks(s, env);
    CHECK(classes[0] == RankClass::signal);
    CHECK(classes[1] == RankClass::noise);  // exactly equal -> noise
    CHECK(classes[2] == RankClass::negative);
}

TEST_CASE("loading fit on an exact parabola") {
    std::vector<double> tau = {-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5};
    std::vector<double> loading;
    for (double t : tau) loading.push_back(0.8 - 0.3 * t * t);
    const FitReport fit = loading_threshold_fit(loading, tau);
    CHECK(fit.quad_r2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.quad_coeffs[2] == doctest::Approx(-0.3));
    CHECK(fit.linear_r2 < 0.2);
}

TEST_CASE("loading fit rejects degenerate designs") {
    CHECK_THROWS_AS(loading_threshold_fit({0.1, 0.2, 0.3, 0.4}, {1.0, 1.0, 1.0, 1.0}),
                    NumericalError);
    CHECK_THROWS_AS(loading_threshold_fit({0.1, 0.2, 0.3}, {0.0, 0.5, 1.0}), DataError);
}

TEST_CASE("pure-noise loadings give weak quadratic fit") {
    int high = 0;
    for (int seed = 0; seed < 10; ++seed) {
        const SynthData data = generate(
            PopulationSpec::uniform(20, 300, 0.0, 0.0, 0.0, 0.0, 400 + seed));
        const TetrachoricMatrix t = tetrachoric_matrix(data.conf);
        const SpectrumReport s = eigenspectrum(t);
        std::vector<double> pc1(t.n_models());
        for (int m = 0; m < t.n_models(); ++m) pc1[m] = s.loadings(m, 0);
        const FitReport fit = loading_threshold_fit(pc1, t.thresholds);
        if (fit.quad_r2 >= 0.3) ++high;
    }
    CHECK(high <= 2);
}
