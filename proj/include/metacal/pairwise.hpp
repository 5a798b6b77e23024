#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metacal/corpus.hpp"

namespace metacal {

// Aligned binary vectors for one model pair over shared non-missing items.
struct PairData {
    std::string model_a, model_b;
    std::vector<std::int8_t> perf_a, perf_b, conf_a, conf_b;
    double gap = 0.0;  // |mean(perf_a) - mean(perf_b)|

    std::size_t n_items() const { return perf_a.size(); }
};

enum class NullMode { base_rate_matched, calibration_preserving };
enum class RegimePair { rr, rnr, nrnr, unknown };

std::string to_string(RegimePair r);

struct NullSummary {
    double mean = 0.0;
    double sd = 0.0;
    int draws = 0;
    int resampled = 0;
};

struct FisherResult {
    double p_two_sided = 1.0;
    double point_prob = 1.0;
    bool exact = true;       // enumeration vs Monte Carlo
    double mc_se = 0.0;      // standard error when Monte Carlo
    std::int64_t tables_or_draws = 0;
};

struct PairReport {
    std::string model_a, model_b;
    double tau = 0.0;
    bool tau_defined = true;
    FisherResult fisher;
    NullSummary null_base_rate;
    NullSummary null_cal_preserving;
    std::vector<double> null_base_rate_samples;
    std::vector<double> null_cal_samples;
    double gap = 0.0;
    RegimePair regime_pair = RegimePair::unknown;
};

// Tie-corrected Kendall tau-b. O(n log n) merge-count path.
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

// O(n^2) reference used as the exactness oracle; must agree with
// kendall_tau_b bit-for-bit.
double kendall_tau_b_brute(const std::vector<double>& x, const std::vector<double>& y);

// tau-b between the performance-difference and confidence-difference
// vectors of a pair.
double pair_tau(const PairData& pair);

// One permuted copy of the pair under a null, on substream
// (seed, draw, attempt). base_rate_matched permutes the four vectors
// independently; calibration_preserving permutes each model's (perf, conf)
// pair jointly.
PairData null_draw(const PairData& pair, NullMode mode, std::uint64_t seed, std::uint64_t draw,
                   std::uint64_t attempt = 0);

// B null tau samples. Draws yielding undefined tau are resampled on the
// next substream; the resample count is reported.
std::vector<double> null_taus(const PairData& pair, NullMode mode, int draws, std::uint64_t seed,
                              int* resampled = nullptr);

// Two-sided Fisher exact test on a 3x3 contingency table of
// (sign dperf, sign dconf) counts: the probability-ordering sum over tables
// with the same margins. Falls back to margin-preserving Monte Carlo when
// the enumeration would exceed max_tables.
FisherResult fisher_exact_3x3(const std::array<std::array<std::int64_t, 3>, 3>& table,
                              std::int64_t max_tables = 10000000,
                              int mc_draws = 100000, std::uint64_t seed = 0);

// Builds the 3x3 sign table of a pair's difference vectors.
std::array<std::array<std::int64_t, 3>, 3> sign_table(const PairData& pair);

// Extracts aligned pair data for two model columns; items may be restricted
// to a cross-model rate window computed on the full matrices.
std::vector<PairData> build_pairs(const JudgementMatrix& perf, const JudgementMatrix& conf,
                                  std::optional<double> window_lo = std::nullopt,
                                  std::optional<double> window_hi = std::nullopt);

struct GapCurvePoint {
    double delta = 0.0;
    double mean_tau = 0.0;
    double ci_half_width = 0.0;
    int n_pairs = 0;
};

// Mean tau over pairs with gap <= delta, for each delta in the grid.
// Deltas admitting zero pairs are omitted.
std::vector<GapCurvePoint> tau_vs_gap_curve(const std::vector<PairReport>& pairs,
                                            const std::vector<double>& deltas);

struct RegimeStats {
    RegimePair regime_pair = RegimePair::unknown;
    double median_tau = 0.0;
    double share_significant = 0.0;  // p < alpha
    int n_pairs = 0;
};

// Stratifies pairs into RR / RNR / NRNR classes; pairs touching an
// unknown-regime model are excluded and counted.
std::vector<RegimeStats> stratify_by_regime(const std::vector<PairReport>& pairs,
                                            const std::vector<ModelMeta>& meta,
                                            double alpha = 0.05, int* n_excluded = nullptr);

}  // namespace metacal
