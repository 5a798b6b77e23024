#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace metacal {

struct JudgementMatrix;

// Per-model non-missing means: yes-rates for confidence matrices,
// accuracies for performance matrices.
std::vector<double> marginal_rates(const JudgementMatrix& matrix);

struct PredictorScores {
    std::vector<std::string> item_ids;
    std::vector<double> internal;    // repeated-sample yes-rate, or the single binary
    std::vector<double> population;  // cross-model mean confidence per item
};

// Internal vs Population correctness predictors for one chosen model.
// `samples` optionally carries per-item repeated-draw yes-rates for that
// model; absent entries fall back to the single binary judgement.
PredictorScores internal_and_population_predictors(
    const JudgementMatrix& conf, const std::string& model,
    const std::optional<std::map<std::string, double>>& samples = std::nullopt);

struct FBetaCurve {
    std::vector<double> betas;
    std::vector<double> scores;
    double precision = 0.0;
    double recall = 0.0;
};

std::vector<double> log_spaced_betas(double lo, double hi, int points);

// F_beta over the grid, treating confidence=1 as predicting correct=1.
// Throws NumericalError when precision or recall is undefined (callers omit
// the curve with the reason).
FBetaCurve fbeta_curve(const std::vector<int>& conf, const std::vector<int>& correct,
                       const std::vector<double>& betas);

struct ConsistencyReport {
    std::vector<std::string> models;
    std::vector<std::string> conditions;          // kept columns
    std::vector<std::string> dropped_conditions;  // zero-variance columns
    std::vector<std::vector<double>> z;           // models x kept conditions
    std::vector<std::size_t> model_order;         // indices sorted by mean z
    double median_pairwise_r = 0.0;
};

// Column-wise z-scores of a models x conditions yes-rate table plus the
// median pairwise Pearson r between raw columns.
ConsistencyReport consistency(const std::vector<std::string>& models,
                              const std::vector<std::string>& conditions,
                              const std::vector<std::vector<double>>& yes_rates);

}  // namespace metacal
