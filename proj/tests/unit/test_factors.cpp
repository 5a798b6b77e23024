#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "metacal/corpus.hpp"
#include "metacal/errors.hpp"
#include "metacal/factors.hpp"
#include "metacal/synth.hpp"
#include "metacal/tetra.hpp"

using namespace metacal;

namespace {

JudgementMatrix small_matrix(const std::vector<std::vector<int>>& rows) {
    JudgementMatrix m;
    m.signal = Signal::confidence;
    const std::size_t n_models = rows.front().size();
    for (std::size_t i = 0; i < rows.size(); ++i) m.item_ids.push_back("i" + std::to_string(i));
    for (std::size_t c = 0; c < n_models; ++c) m.model_ids.push_back("m" + std::to_string(c));
    m.cells.assign(rows.size() * n_models, -1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < n_models; ++c) {
            m.set(i, c, static_cast<std::int8_t>(rows[i][c]));
        }
    }
    m.marginals.assign(n_models, 0.0);
    for (std::size_t c = 0; c < n_models; ++c) {
        double sum = 0.0;
        int present = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (m.at(i, c) >= 0) {
                sum += m.at(i, c);
                ++present;
            }
        }
        m.marginals[c] = sum / present;
    }
    return m;
}

SpectrumReport loadings_of(const std::vector<double>& column) {
    SpectrumReport s;
    s.loadings = Eigen::MatrixXd::Zero(column.size(), column.size());
    for (std::size_t m = 0; m < column.size(); ++m) s.loadings(m, 0) = column[m];
    s.eigenvalues.assign(column.size(), 1.0);
    s.normalized.assign(column.size(), 0.0);
    s.cumulative.assign(column.size(), 0.0);
    s.negative_flags.assign(column.size(), false);
    return s;
}

}  // namespace

TEST_CASE("factor scores of a constant matrix vanish") {
    const JudgementMatrix m = small_matrix({{1, 1}, {1, 1}, {1, 1}});
    const FactorScores s = factor_scores(m, loadings_of({0.7, 0.4}), 0);
    for (double v : s.scores) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("factor scores hand fixture") {
    // 3 items x 2 models; marginals: m0 = 2/3, m1 = 1/3.
    const JudgementMatrix m = small_matrix({{1, 0}, {1, 1}, {0, 0}});
    const FactorScores s = factor_scores(m, loadings_of({0.5, 0.25}), 0);
    // item 0: (1 - 2/3)*0.5 + (0 - 1/3)*0.25 = 1/6 - 1/12 = 1/12
    CHECK(s.scores[0] == doctest::Approx(1.0 / 12.0));
    // item 1: (1 - 2/3)*0.5 + (1 - 1/3)*0.25 = 1/6 + 1/6 = 1/3
    CHECK(s.scores[1] == doctest::Approx(1.0 / 3.0));
    // item 2: (0 - 2/3)*0.5 + (0 - 1/3)*0.25 = -1/3 - 1/12 = -5/12
    CHECK(s.scores[2] == doctest::Approx(-5.0 / 12.0));
}

TEST_CASE("factor scores skip missing cells and respect k range") {
    JudgementMatrix m = small_matrix({{1, 0}, {1, 1}, {0, 0}});
    m.set(0, 1, -1);
    m.marginals[1] = 0.5;
    const SpectrumReport s = loadings_of({0.5, 0.25});
    const FactorScores scores = factor_scores(m, s, 0);
    CHECK(scores.scores[0] == doctest::Approx((1.0 - 2.0 / 3.0) * 0.5));
    CHECK_THROWS_AS(factor_scores(m, s, 5), DataError);
}

TEST_CASE("centering invariance") {
    // Recomputing marginals after flipping a column's constant offset keeps
    // scores identical: verified by comparing against a manual projection.
    const SynthData data = generate(PopulationSpec::uniform(6, 300, 0.6, 0.1, 0.0, 0.0, 17));
    const SpectrumReport s = eigenspectrum(tetrachoric_matrix(data.conf));
    const FactorScores scores = factor_scores(data.conf, s, 0);
    for (std::size_t i = 0; i < 5; ++i) {
        double manual = 0.0;
        for (std::size_t m = 0; m < data.conf.n_models(); ++m) {
            manual += (data.conf.at(i, m) - data.conf.marginals[m]) * s.loadings(m, 0);
        }
        CHECK(scores.scores[i] == doctest::Approx(manual).epsilon(1e-12));
    }
}

TEST_CASE("contentious filter bounds are inclusive") {
    const std::vector<double> perf = {0.05, 0.1, 0.5, 0.9, 0.95, 1.0};
    const std::vector<double> conf = {0.5, 0.5, 0.5, 0.9, 0.5, 0.5};
    const std::vector<std::size_t> kept = contentious_filter(perf, conf, 0.1, 0.9);
    CHECK(kept == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("contentious filter monotone in bounds") {
    const SynthData data = generate(PopulationSpec::uniform(8, 300, 0.5, 0.0, 0.5, 0.0, 23));
    const std::vector<double> perf = item_rates(data.perf);
    const std::vector<double> conf = item_rates(data.conf);
    const auto narrow = contentious_filter(perf, conf, 0.25, 0.75);
    const auto wide = contentious_filter(perf, conf, 0.1, 0.9);
    CHECK(wide.size() >= narrow.size());
}

TEST_CASE("alignment of identical scores is one") {
    FactorScores a, b;
    a.scores = {0.3, -0.2, 0.8, -0.5, 0.1};
    b.scores = a.scores;
    const AlignmentReport r = alignment_r(a, b, std::nullopt);
    CHECK(r.r_unfiltered == doctest::Approx(1.0));
    CHECK(r.r2_unfiltered == doctest::Approx(1.0));
}

TEST_CASE("alignment errors on zero variance and tiny subsets") {
    FactorScores a, b;
    a.scores = {1.0, 1.0, 1.0, 1.0};
    b.scores = {0.1, 0.2, 0.3, 0.4};
    CHECK_THROWS_AS(alignment_r(a, b, std::nullopt), NumericalError);
    a.scores = {0.1, 0.4, 0.2, 0.9};
    CHECK_THROWS_AS(alignment_r(a, b, std::vector<std::size_t>{0, 1}), DataError);
}

TEST_CASE("z-scoring leaves r unchanged") {
    const SynthData data = generate(PopulationSpec::uniform(8, 400, 0.6, 0.0, 0.8, 0.0, 41));
    const FactorScores perf =
        factor_scores(data.perf, eigenspectrum(tetrachoric_matrix(data.perf)), 0);
    const FactorScores conf =
        factor_scores(data.conf, eigenspectrum(tetrachoric_matrix(data.conf)), 0);
    const AlignmentReport r = alignment_r(perf, conf, std::nullopt);
    const double rz = pearson_r(r.z_perf_all, r.z_conf_all);
    CHECK(std::fabs(rz - r.r_unfiltered) < 1e-12);
}

TEST_CASE("alignment recovers injected cross-alignment direction") {
    // cross_alignment = 1 with equal loadings: r should be high and grow
    // with n.
    const SynthData data = generate(PopulationSpec::uniform(12, 1500, 0.7, 0.0, 1.0, 0.0, 53));
    const FactorScores perf =
        factor_scores(data.perf, eigenspectrum(tetrachoric_matrix(data.perf)), 0);
    const FactorScores conf =
        factor_scores(data.conf, eigenspectrum(tetrachoric_matrix(data.conf)), 0);
    const AlignmentReport r = alignment_r(perf, conf, std::nullopt);
    CHECK(r.r_unfiltered > 0.75);
}
