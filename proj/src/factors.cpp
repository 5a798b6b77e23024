#include "metacal/factors.hpp"

#include <cmath>

#include "metacal/corpus.hpp"
#include "metacal/errors.hpp"

namespace metacal {

FactorScores factor_scores(const JudgementMatrix& matrix, const SpectrumReport& spectrum, int k) {
    const int n_models = static_cast<int>(matrix.n_models());
    if (spectrum.loadings.rows() != n_models) {
        throw DataError("factor_scores: loadings not dimensioned to this matrix");
    }
    if (k < 0 || k >= spectrum.n_ranks() || spectrum.negative_flags[k]) {
        throw DataError("factor_scores: factor index out of the non-negative-eigenvalue range");
    }

    FactorScores out;
    out.factor_index = k;
    out.centering = matrix.marginals;
    out.scores.resize(matrix.n_items());
    for (std::size_t i = 0; i < matrix.n_items(); ++i) {
        double score = 0.0;
        for (int m = 0; m < n_models; ++m) {
            const int cell = matrix.at(i, m);
            if (cell < 0) continue;
            score += (static_cast<double>(cell) - matrix.marginals[m]) * spectrum.loadings(m, k);
        }
        out.scores[i] = score;
    }
    return out;
}

std::vector<double> item_rates(const JudgementMatrix& matrix) {
    std::vector<double> rates(matrix.n_items(), 0.0);
    for (std::size_t i = 0; i < matrix.n_items(); ++i) {
        int present = 0, yes = 0;
        for (std::size_t m = 0; m < matrix.n_models(); ++m) {
            const int cell = matrix.at(i, m);
            if (cell < 0) continue;
            ++present;
            yes += cell;
        }
        rates[i] = present ? static_cast<double>(yes) / present : 0.0;
    }
    return rates;
}

std::vector<std::size_t> contentious_filter(const std::vector<double>& perf_rates,
                                            const std::vector<double>& conf_rates, double lo,
                                            double hi) {
    if (perf_rates.size() != conf_rates.size()) {
        throw DataError("contentious_filter: rate vectors differ in length");
    }
    if (!(lo < hi)) throw DataError("contentious_filter: need lo < hi");
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < perf_rates.size(); ++i) {
        if (perf_rates[i] >= lo && perf_rates[i] <= hi && conf_rates[i] >= lo &&
            conf_rates[i] <= hi) {
            kept.push_back(i);
        }
    }
    return kept;
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw DataError("pearson_r: need two equal-length vectors of size >= 2");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        throw NumericalError("pearson_r: undefined correlation, zero-variance vector");
    }
    return sxy / std::sqrt(sxx * syy);
}

namespace {

void zscore_into(const std::vector<double>& v, std::vector<double>& out) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= n;
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    out.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
}

}  // namespace

AlignmentReport alignment_r(const FactorScores& perf_scores, const FactorScores& conf_scores,
                            const std::optional<std::vector<std::size_t>>& subset,
                            double bounds_lo, double bounds_hi) {
    const std::vector<double>& perf = perf_scores.scores;
    const std::vector<double>& conf = conf_scores.scores;
    if (perf.size() != conf.size()) {
        throw DataError("alignment_r: score vectors differ in length (item sets not aligned)");
    }

    AlignmentReport report;
    report.n_all = perf.size();
    report.bounds_lo = bounds_lo;
    report.bounds_hi = bounds_hi;
    report.r_unfiltered = pearson_r(perf, conf);
    report.r2_unfiltered = report.r_unfiltered * report.r_unfiltered;
    zscore_into(perf, report.z_perf_all);
    zscore_into(conf, report.z_conf_all);

    if (subset) {
        std::vector<double> perf_sub, conf_sub;
        perf_sub.reserve(subset->size());
        conf_sub.reserve(subset->size());
        for (std::size_t idx : *subset) {
            perf_sub.push_back(perf.at(idx));
            conf_sub.push_back(conf.at(idx));
        }
        if (perf_sub.size() < 3) {
            throw DataError("alignment_r: fewer than 3 items after filtering");
        }
        report.n_filtered = perf_sub.size();
        report.r_filtered = pearson_r(perf_sub, conf_sub);
        report.r2_filtered = report.r_filtered * report.r_filtered;
        zscore_into(perf_sub, report.z_perf_filtered);
        zscore_into(conf_sub, report.z_conf_filtered);
    } else {
        report.n_filtered = report.n_all;
        report.r_filtered = report.r_unfiltered;
        report.r2_filtered = report.r2_unfiltered;
        report.z_perf_filtered = report.z_perf_all;
        report.z_conf_filtered = report.z_conf_all;
    }
    return report;
}

}  // namespace metacal
