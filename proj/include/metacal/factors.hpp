#pragma once

#include <optional>
#include <vector>

#include "metacal/spectra.hpp"

namespace metacal {

struct JudgementMatrix;

struct FactorScores {
    std::vector<double> scores;     // per item
    int factor_index = 0;
    std::vector<double> centering;  // per-model marginal means used
};

// Mean-centred projection of the binary matrix onto loading column k,
// summed over non-missing cells.
FactorScores factor_scores(const JudgementMatrix& matrix, const SpectrumReport& spectrum, int k);

// Per-item cross-model rate over non-missing cells.
std::vector<double> item_rates(const JudgementMatrix& matrix);

// Indices of items whose performance and confidence rates both lie in
// [lo, hi], bounds inclusive.
std::vector<std::size_t> contentious_filter(const std::vector<double>& perf_rates,
                                            const std::vector<double>& conf_rates, double lo,
                                            double hi);

struct AlignmentReport {
    double r_unfiltered = 0.0;
    double r2_unfiltered = 0.0;
    double r_filtered = 0.0;
    double r2_filtered = 0.0;
    std::size_t n_all = 0;
    std::size_t n_filtered = 0;
    double bounds_lo = 0.0;
    double bounds_hi = 1.0;
    // z-scored score pairs for scatter plots (all items, then subset).
    std::vector<double> z_perf_all, z_conf_all;
    std::vector<double> z_perf_filtered, z_conf_filtered;
};

double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

AlignmentReport alignment_r(const FactorScores& perf_scores, const FactorScores& conf_scores,
                            const std::optional<std::vector<std::size_t>>& subset,
                            double bounds_lo = 0.0, double bounds_hi = 1.0);

}  // namespace metacal
