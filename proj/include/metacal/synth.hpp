#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metacal/corpus.hpp"

namespace metacal {

// Single-factor threshold population. Per item, two latent axes (confidence
// and performance) are drawn with correlation cross_alignment; per model,
// the continuous signal is loading * axis + noise and is binarized by
// exceedance, so the expected yes-rate is Phi(-threshold). self_calibration
// correlates a model's confidence and performance noise components without
// touching the cross-model structure.
struct PopulationSpec {
    int n_models = 0;
    int n_items = 0;
    std::vector<double> loadings_conf;
    std::vector<double> loadings_perf;
    std::vector<double> thresholds_conf;
    std::vector<double> thresholds_perf;
    double cross_alignment = 0.0;
    std::vector<double> self_calibration;  // per model, in [0, 1]
    std::uint64_t seed = 0;

    // Uniform-parameter convenience constructor.
    static PopulationSpec uniform(int n_models, int n_items, double loading, double threshold,
                                  double cross_alignment, double self_calibration,
                                  std::uint64_t seed);
};

struct TruthDraws {
    std::vector<double> axis_conf;  // per item
    std::vector<double> axis_perf;
    std::vector<double> z_conf;  // row-major items x models, continuous signals
    std::vector<double> z_perf;
};

struct SynthData {
    JudgementMatrix conf;
    JudgementMatrix perf;
    TruthDraws truth;
};

SynthData generate(const PopulationSpec& spec);

// Renders generated matrices as trial records (the same JSON-lines format
// the ingest side consumes). Text fields are left empty.
TrialSet to_trials(const SynthData& data, const std::string& benchmark, Probe probe);

}  // namespace metacal
