#include "metacal/synth.hpp"

#include <cmath>

#include "metacal/errors.hpp"
#include "metacal/rng.hpp"

namespace metacal {

PopulationSpec PopulationSpec::uniform(int n_models, int n_items, double loading,
                                       double threshold, double cross_alignment,
                                       double self_calibration, std::uint64_t seed) {
    PopulationSpec spec;
    spec.n_models = n_models;
    spec.n_items = n_items;
    spec.loadings_conf.assign(n_models, loading);
    spec.loadings_perf.assign(n_models, loading);
    spec.thresholds_conf.assign(n_models, threshold);
    spec.thresholds_perf.assign(n_models, threshold);
    spec.cross_alignment = cross_alignment;
    spec.self_calibration.assign(n_models, self_calibration);
    spec.seed = seed;
    return spec;
}

namespace {

void validate(const PopulationSpec& spec) {
    if (spec.n_models < 2 || spec.n_items < 2) {
        throw DataError("generate: need at least 2 models and 2 items");
    }
    const std::size_t nm = static_cast<std::size_t>(spec.n_models);
    if (spec.loadings_conf.size() != nm || spec.loadings_perf.size() != nm ||
        spec.thresholds_conf.size() != nm || spec.thresholds_perf.size() != nm ||
        spec.self_calibration.size() != nm) {
        throw DataError("generate: per-model parameter vectors must have n_models entries");
    }
    for (std::size_t m = 0; m < nm; ++m) {
        if (std::fabs(spec.loadings_conf[m]) > 1.0 || std::fabs(spec.loadings_perf[m]) > 1.0) {
            throw DataError("generate: loadings must lie in [-1, 1]");
        }
        if (spec.self_calibration[m] < 0.0 || spec.self_calibration[m] > 1.0) {
            throw DataError("generate: self_calibration must lie in [0, 1]");
        }
    }
    if (std::fabs(spec.cross_alignment) > 1.0) {
        throw DataError("generate: cross_alignment must lie in [-1, 1]");
    }
}

std::string item_name(int i, int width) {
    std::string s = std::to_string(i);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return "item" + s;
}

std::string model_name(int m, int width) {
    std::string s = std::to_string(m);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return "model" + s;
}

}  // namespace

SynthData generate(const PopulationSpec& spec) {
    validate(spec);
    const int nm = spec.n_models;
    const int ni = spec.n_items;
    const int item_width = static_cast<int>(std::to_string(ni - 1).size());
    const int model_width = static_cast<int>(std::to_string(nm - 1).size());

    SynthData data;
    data.truth.axis_conf.resize(ni);
    data.truth.axis_perf.resize(ni);
    data.truth.z_conf.resize(static_cast<std::size_t>(ni) * nm);
    data.truth.z_perf.resize(static_cast<std::size_t>(ni) * nm);

    for (JudgementMatrix* matrix : {&data.conf, &data.perf}) {
        matrix->cells.assign(static_cast<std::size_t>(ni) * nm, -1);
        for (int i = 0; i < ni; ++i) matrix->item_ids.push_back(item_name(i, item_width));
        for (int m = 0; m < nm; ++m) matrix->model_ids.push_back(model_name(m, model_width));
    }
    data.conf.signal = Signal::confidence;
    data.perf.signal = Signal::performance;

    const double ca = spec.cross_alignment;
    const double axis_mix = std::sqrt(1.0 - ca * ca);

    for (int i = 0; i < ni; ++i) {
        // Item substreams keep generation order-independent.
        Rng axis_rng = Rng::substream(spec.seed, {0, static_cast<std::uint64_t>(i)});
        const double a_conf = axis_rng.normal();
        const double a_perf = ca * a_conf + axis_mix * axis_rng.normal();
        data.truth.axis_conf[i] = a_conf;
        data.truth.axis_perf[i] = a_perf;

        for (int m = 0; m < nm; ++m) {
            Rng cell_rng = Rng::substream(
                spec.seed, {1, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(m)});
            const double lc = spec.loadings_conf[m];
            const double lp = spec.loadings_perf[m];
            const double sc = spec.self_calibration[m];
            // Noise decomposition: a component shared between the model's
            // confidence and performance signals carries self-calibration;
            // the noise correlation equals sc.
            const double shared = cell_rng.normal();
            const double w = std::sqrt(sc);
            const double v = std::sqrt(1.0 - sc);
            const double eps_c = w * shared + v * cell_rng.normal();
            const double eps_p = w * shared + v * cell_rng.normal();
            const double z_c = lc * a_conf + std::sqrt(1.0 - lc * lc) * eps_c;
            const double z_p = lp * a_perf + std::sqrt(1.0 - lp * lp) * eps_p;
            data.truth.z_conf[static_cast<std::size_t>(i) * nm + m] = z_c;
            data.truth.z_perf[static_cast<std::size_t>(i) * nm + m] = z_p;
            data.conf.set(i, m, z_c > spec.thresholds_conf[m] ? 1 : 0);
            data.perf.set(i, m, z_p > spec.thresholds_perf[m] ? 1 : 0);
        }
    }

    for (JudgementMatrix* matrix : {&data.conf, &data.perf}) {
        matrix->marginals.resize(nm);
        for (int m = 0; m < nm; ++m) {
            std::int64_t yes = 0;
            for (int i = 0; i < ni; ++i) yes += matrix->at(i, m);
            matrix->marginals[m] = static_cast<double>(yes) / static_cast<double>(ni);
        }
    }
    return data;
}

TrialSet to_trials(const SynthData& data, const std::string& benchmark, Probe probe) {
    TrialSet trials;
    const std::size_t nm = data.conf.n_models();
    const std::size_t ni = data.conf.n_items();
    for (std::size_t i = 0; i < ni; ++i) {
        for (std::size_t m = 0; m < nm; ++m) {
            TrialRecord rec;
            rec.benchmark = benchmark;
            rec.probe = probe;
            rec.model = data.conf.model_ids[m];
            rec.item_id = data.conf.item_ids[i];
            rec.confidence = data.conf.at(i, m);
            rec.correct = data.perf.at(i, m);
            trials.records.push_back(std::move(rec));
        }
    }
    return trials;
}

}  // namespace metacal
