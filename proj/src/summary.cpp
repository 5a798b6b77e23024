#include "metacal/summary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metacal/corpus.hpp"
#include "metacal/errors.hpp"
#include "metacal/factors.hpp"

namespace metacal {

std::vector<double> marginal_rates(const JudgementMatrix& matrix) {
    return matrix.marginals;
}

PredictorScores internal_and_population_predictors(
    const JudgementMatrix& conf, const std::string& model,
    const std::optional<std::map<std::string, double>>& samples) {
    std::size_t model_idx = conf.n_models();
    for (std::size_t m = 0; m < conf.n_models(); ++m) {
        if (conf.model_ids[m] == model) {
            model_idx = m;
            break;
        }
    }
    if (model_idx == conf.n_models()) {
        throw DataError("predictors: model '" + model + "' not in matrix");
    }

    const std::vector<double> population = item_rates(conf);
    PredictorScores out;
    for (std::size_t i = 0; i < conf.n_items(); ++i) {
        const int own = conf.at(i, model_idx);
        double internal;
        if (samples && samples->count(conf.item_ids[i])) {
            internal = samples->at(conf.item_ids[i]);
        } else if (own >= 0) {
            internal = static_cast<double>(own);
        } else {
            continue;  // no judgement from this model for the item
        }
        out.item_ids.push_back(conf.item_ids[i]);
        out.internal.push_back(internal);
        out.population.push_back(population[i]);
    }
    return out;
}

std::vector<double> log_spaced_betas(double lo, double hi, int points) {
    if (points < 2 || lo <= 0.0 || hi <= lo) throw DataError("bad beta grid");
    std::vector<double> betas(points);
    const double step = (std::log10(hi) - std::log10(lo)) / (points - 1);
    for (int i = 0; i < points; ++i) betas[i] = std::pow(10.0, std::log10(lo) + step * i);
    return betas;
}

FBetaCurve fbeta_curve(const std::vector<int>& conf, const std::vector<int>& correct,
                       const std::vector<double>& betas) {
    if (conf.size() != correct.size() || conf.empty()) {
        throw DataError("fbeta_curve: conf and correct must be aligned and nonempty");
    }
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
        if (conf[i] == 1 && correct[i] == 1) ++tp;
        else if (conf[i] == 1 && correct[i] == 0) ++fp;
        else if (conf[i] == 0 && correct[i] == 1) ++fn;
    }
    if (tp + fp == 0) throw NumericalError("fbeta_curve: no predicted positives, precision undefined");
    if (tp + fn == 0) throw NumericalError("fbeta_curve: no actual positives, recall undefined");

    FBetaCurve curve;
    curve.betas = betas;
    curve.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    curve.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    for (double beta : betas) {
        const double b2 = beta * beta;
        const double denom = b2 * curve.precision + curve.recall;
        curve.scores.push_back(denom > 0.0
                                   ? (1.0 + b2) * curve.precision * curve.recall / denom
                                   : 0.0);
    }
    return curve;
}

ConsistencyReport consistency(const std::vector<std::string>& models,
                              const std::vector<std::string>& conditions,
                              const std::vector<std::vector<double>>& yes_rates) {
    const std::size_t n_models = models.size();
    const std::size_t n_cond = conditions.size();
    if (n_models < 2 || n_cond < 2) {
        throw DataError("consistency: need at least 2 models and 2 conditions");
    }
    if (yes_rates.size() != n_models) throw DataError("consistency: row count mismatch");
    for (const auto& row : yes_rates) {
        if (row.size() != n_cond) throw DataError("consistency: column count mismatch");
    }

    ConsistencyReport report;
    report.models = models;

    // Column-wise z-scores; zero-variance columns are dropped with notice.
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < n_cond; ++c) {
        double mean = 0.0;
        for (std::size_t m = 0; m < n_models; ++m) mean += yes_rates[m][c];
        mean /= static_cast<double>(n_models);
        double var = 0.0;
        for (std::size_t m = 0; m < n_models; ++m) {
            var += (yes_rates[m][c] - mean) * (yes_rates[m][c] - mean);
        }
        var /= static_cast<double>(n_models);
        if (var <= 0.0) {
            report.dropped_conditions.push_back(conditions[c]);
        } else {
            kept.push_back(c);
            report.conditions.push_back(conditions[c]);
        }
    }
    if (kept.empty()) throw DataError("consistency: all condition columns have zero variance");

    report.z.assign(n_models, std::vector<double>(kept.size(), 0.0));
    for (std::size_t kc = 0; kc < kept.size(); ++kc) {
        const std::size_t c = kept[kc];
        double mean = 0.0;
        for (std::size_t m = 0; m < n_models; ++m) mean += yes_rates[m][c];
        mean /= static_cast<double>(n_models);
        double var = 0.0;
        for (std::size_t m = 0; m < n_models; ++m) {
            var += (yes_rates[m][c] - mean) * (yes_rates[m][c] - mean);
        }
        var /= static_cast<double>(n_models);
        const double sd = std::sqrt(var);
        for (std::size_t m = 0; m < n_models; ++m) {
            report.z[m][kc] = (yes_rates[m][c] - mean) / sd;
        }
    }

    report.model_order.resize(n_models);
    std::iota(report.model_order.begin(), report.model_order.end(), 0);
    std::vector<double> mean_z(n_models, 0.0);
    for (std::size_t m = 0; m < n_models; ++m) {
        for (double z : report.z[m]) mean_z[m] += z;
        mean_z[m] /= static_cast<double>(kept.size());
    }
    std::sort(report.model_order.begin(), report.model_order.end(),
              [&](std::size_t a, std::size_t b) {
                  if (mean_z[a] != mean_z[b]) return mean_z[a] < mean_z[b];
                  return models[a] < models[b];
              });

    // Median pairwise Pearson r between raw yes-rate columns.
    std::vector<double> rs;
    for (std::size_t a = 0; a < kept.size(); ++a) {
        for (std::size_t b = a + 1; b < kept.size(); ++b) {
            std::vector<double> col_a(n_models), col_b(n_models);
            for (std::size_t m = 0; m < n_models; ++m) {
                col_a[m] = yes_rates[m][kept[a]];
                col_b[m] = yes_rates[m][kept[b]];
            }
            rs.push_back(pearson_r(col_a, col_b));
        }
    }
    if (!rs.empty()) {
        std::sort(rs.begin(), rs.end());
        const std::size_t mid = rs.size() / 2;
        report.median_pairwise_r =
            (rs.size() % 2) ? rs[mid] : 0.5 * (rs[mid - 1] + rs[mid]);
    }
    return report;
}

}  // namespace metacal
