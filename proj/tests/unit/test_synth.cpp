#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "metacal/corpus.hpp"
#include "metacal/errors.hpp"
#include "metacal/factors.hpp"
#include "metacal/pairwise.hpp"
#include "metacal/spectra.hpp"
#include "metacal/synth.hpp"
#include "metacal/tetra.hpp"

using namespace metacal;

TEST_CASE("generation is deterministic given the seed") {
    const PopulationSpec spec = PopulationSpec::uniform(6, 120, 0.5, 0.2, 0.3, 0.1, 9);
    const SynthData a = generate(spec);
    const SynthData b = generate(spec);
    CHECK(a.conf.cells == b.conf.cells);
    CHECK(a.perf.cells == b.perf.cells);
    CHECK(a.truth.axis_conf == b.truth.axis_conf);
    PopulationSpec other = spec;
    other.seed = 10;
    CHECK(generate(other).conf.cells != a.conf.cells);
}

TEST_CASE("spec validation") {
    PopulationSpec spec = PopulationSpec::uniform(4, 50, 0.5, 0.0, 0.0, 0.0, 1);
    spec.loadings_conf[2] = 1.5;
    CHECK_THROWS_AS(generate(spec), DataError);
    spec = PopulationSpec::uniform(4, 50, 0.5, 0.0, 1.7, 0.0, 1);
    CHECK_THROWS_AS(generate(spec), DataError);
    spec = PopulationSpec::uniform(1, 50, 0.5, 0.0, 0.0, 0.0, 1);
    CHECK_THROWS_AS(generate(spec), DataError);
}

TEST_CASE("marginal targeting: yes-rate converges to Phi(-tau)") {
    const double tau = 0.7;
    const SynthData data = generate(PopulationSpec::uniform(8, 5000, 0.5, tau, 0.0, 0.0, 33));
    const double expected = norm_cdf(-tau);
    for (double rate : data.conf.marginals) {
        CHECK(std::fabs(rate - expected) < 0.02);
    }
}

TEST_CASE("zero loadings give independent columns") {
    // Single pair at n = 5000: estimate within sampling noise of zero.
    const SynthData two = generate(PopulationSpec::uniform(2, 5000, 0.0, 0.0, 0.0, 0.0, 40));
    CHECK(std::fabs(tetrachoric_matrix(two.conf).rho(0, 1)) < 0.05);
    // Across 15 pairs the worst draw gets a sampling-noise allowance.
    const SynthData data = generate(PopulationSpec::uniform(6, 5000, 0.0, 0.0, 0.0, 0.0, 41));
    const TetrachoricMatrix t = tetrachoric_matrix(data.conf);
    for (int a = 0; a < 6; ++a) {
        for (int b = a + 1; b < 6; ++b) {
            CHECK(std::fabs(t.rho(a, b)) < 0.08);
        }
    }
}

TEST_CASE("uniform loadings 0.7 give pairwise latent rho 0.49") {
    const SynthData data = generate(PopulationSpec::uniform(8, 2000, 0.7, 0.0, 0.0, 0.0, 47));
    const TetrachoricMatrix t = tetrachoric_matrix(data.conf);
    double mean = 0.0;
    int count = 0;
    for (int a = 0; a < 8; ++a) {
        for (int b = a + 1; b < 8; ++b) {
            mean += t.rho(a, b);
            ++count;
        }
    }
    mean /= count;
    CHECK(std::fabs(mean - 0.49) < 0.05);
}

TEST_CASE("rank-one spectra under uniform loadings") {
    int detected = 0;
    const int seeds = 10;
    for (int seed = 0; seed < seeds; ++seed) {
        const SynthData data =
            generate(PopulationSpec::uniform(10, 500, 0.65, 0.0, 0.0, 0.0, 100 + seed));
        const SpectrumReport s = eigenspectrum(tetrachoric_matrix(data.conf));
        const NullEnvelope env = parallel_analysis(data.conf, 40, 200 + seed);
        const std::vector<RankClass> classes = classify_ranks(s, env);
        bool ok = classes[0] == RankClass::signal;
        for (std::size_t r = 1; r < classes.size() && ok; ++r) {
            if (classes[r] == RankClass::signal) ok = false;
        }
        if (ok) ++detected;
    }
    CHECK(detected >= 9);
}

TEST_CASE("cross-alignment drives factor alignment") {
    const SynthData aligned = generate(PopulationSpec::uniform(12, 2000, 0.7, 0.0, 1.0, 0.0, 55));
    const FactorScores pa =
        factor_scores(aligned.perf, eigenspectrum(tetrachoric_matrix(aligned.perf)), 0);
    const FactorScores ca =
        factor_scores(aligned.conf, eigenspectrum(tetrachoric_matrix(aligned.conf)), 0);
    const double r_aligned = pearson_r(pa.scores, ca.scores);
    CHECK(r_aligned > 0.8);

    const SynthData indep = generate(PopulationSpec::uniform(12, 2000, 0.7, 0.0, 0.0, 0.0, 56));
    const FactorScores pi =
        factor_scores(indep.perf, eigenspectrum(tetrachoric_matrix(indep.perf)), 0);
    const FactorScores ci =
        factor_scores(indep.conf, eigenspectrum(tetrachoric_matrix(indep.conf)), 0);
    CHECK(std::fabs(pearson_r(pi.scores, ci.scores)) < 0.12);
}

TEST_CASE("self-calibration knob separates the two nulls") {
    auto null_means = [](double sc, std::uint64_t seed) {
        const SynthData data =
            generate(PopulationSpec::uniform(2, 800, 0.0, 0.0, 0.0, sc, seed));
        PairData pair;
        pair.model_a = "m0";
        pair.model_b = "m1";
        for (int i = 0; i < 800; ++i) {
            pair.perf_a.push_back(static_cast<std::int8_t>(data.perf.at(i, 0)));
            pair.perf_b.push_back(static_cast<std::int8_t>(data.perf.at(i, 1)));
            pair.conf_a.push_back(static_cast<std::int8_t>(data.conf.at(i, 0)));
            pair.conf_b.push_back(static_cast<std::int8_t>(data.conf.at(i, 1)));
        }
        auto mean_of = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return s / v.size();
        };
        const double base = mean_of(null_taus(pair, NullMode::base_rate_matched, 300, 3));
        const double cal = mean_of(null_taus(pair, NullMode::calibration_preserving, 300, 3));
        return std::make_pair(base, cal);
    };
    const auto [base0, cal0] = null_means(0.0, 71);
    CHECK(std::fabs(cal0 - base0) < 0.05);
    const auto [base1, cal1] = null_means(0.7, 72);
    CHECK(cal1 > base1 + 0.05);
}

TEST_CASE("to_trials closes the loop with the ingest format") {
    const SynthData data = generate(PopulationSpec::uniform(4, 30, 0.5, 0.0, 0.0, 0.0, 77));
    const TrialSet trials = to_trials(data, "synbench", Probe::prospective);
    CHECK(trials.size() == 4 * 30);
    std::ostringstream out;
    save_trials_jsonl(trials, out);
    std::istringstream in(out.str());
    const TrialSet parsed = parse_trials(in, TrialFormat::jsonl, true, "synth");
    const JudgementMatrix conf =
        build_matrix(parsed, "synbench", Probe::prospective, Signal::confidence);
    CHECK(conf.cells == data.conf.cells);
    const JudgementMatrix perf =
        build_matrix(parsed, "synbench", Probe::prospective, Signal::performance);
    CHECK(perf.cells == data.perf.cells);
}
