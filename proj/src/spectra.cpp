#include "metacal/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "metacal/corpus.hpp"
#include "metacal/errors.hpp"
#include "metacal/rng.hpp"

namespace metacal {

SpectrumReport eigenspectrum(const TetrachoricMatrix& corr) {
    if (corr.has_missing()) {
        std::string offender;
        for (int a = 0; a < corr.n_models() && offender.empty(); ++a) {
            for (int b = 0; b < corr.n_models(); ++b) {
                if (corr.missing(a, b)) {
                    offender = corr.model_ids[a];
                    break;
                }
            }
        }
        throw DataError("eigenspectrum: correlation matrix has missing cells; drop model '" +
                        offender + "' (zero pairwise overlap) and re-estimate");
    }
    const int n = corr.n_models();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr.rho);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigenspectrum: eigendecomposition failed");
    }

    SpectrumReport report;
    report.eigenvalues.resize(n);
    report.normalized.resize(n);
    report.cumulative.resize(n);
    report.negative_flags.resize(n);
    report.loadings = Eigen::MatrixXd::Zero(n, n);

    // Eigen returns ascending order; reverse to descending.
    double running = 0.0;
    for (int r = 0; r < n; ++r) {
        const int src = n - 1 - r;
        const double lambda = solver.eigenvalues()(src);
        report.eigenvalues[r] = lambda;
        report.normalized[r] = lambda / n;
        running += report.normalized[r];
        report.cumulative[r] = running;
        report.negative_flags[r] = lambda < 0.0;

        if (lambda > 0.0) {
            Eigen::VectorXd v = solver.eigenvectors().col(src);
            // Eigenvector sign is arbitrary; pin the largest-|entry| positive
            // so loadings and factor scores are stable across runs.
            int arg_max = 0;
            v.cwiseAbs().maxCoeff(&arg_max);
            if (v(arg_max) < 0.0) v = -v;
            report.loadings.col(r) = v * std::sqrt(lambda);
        }
    }
    return report;
}

JudgementMatrix shuffle_columns(const JudgementMatrix& matrix, std::uint64_t seed,
                                std::uint64_t draw_index, std::uint64_t attempt) {
    JudgementMatrix shuffled = matrix;
    for (std::size_t m = 0; m < matrix.n_models(); ++m) {
        std::vector<std::size_t> rows;
        std::vector<std::int8_t> vals;
        for (std::size_t i = 0; i < matrix.n_items(); ++i) {
            const int cell = matrix.at(i, m);
            if (cell < 0) continue;
            rows.push_back(i);
            vals.push_back(static_cast<std::int8_t>(cell));
        }
        Rng rng = Rng::substream(seed, {draw_index, attempt, static_cast<std::uint64_t>(m)});
        rng.shuffle(vals);
        for (std::size_t j = 0; j < rows.size(); ++j) shuffled.set(rows[j], m, vals[j]);
    }
    return shuffled;
}

NullEnvelope parallel_analysis(const JudgementMatrix& matrix, int draws, std::uint64_t seed) {
    if (draws < 1) throw DataError("parallel_analysis: draws must be >= 1");
    const int n = static_cast<int>(matrix.n_models());

    NullEnvelope envelope;
    envelope.draws = draws;
    envelope.seed = seed;

    std::vector<std::vector<double>> per_rank(n);
    for (auto& v : per_rank) v.reserve(draws);

    for (int b = 0; b < draws; ++b) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt >= 100) {
                throw NumericalError("parallel_analysis: draw " + std::to_string(b) +
                                     " kept degenerating after 100 attempts");
            }
            try {
                const JudgementMatrix shuffled =
                    shuffle_columns(matrix, seed, static_cast<std::uint64_t>(b), attempt);
                const SpectrumReport spectrum = eigenspectrum(tetrachoric_matrix(shuffled));
                for (int r = 0; r < n; ++r) per_rank[r].push_back(spectrum.normalized[r]);
                envelope.retries += static_cast<int>(attempt);
                break;
            } catch (const NumericalError&) {
                continue;
            }
        }
    }

    envelope.per_rank_q95.resize(n);
    envelope.per_rank_mean.resize(n);
    for (int r = 0; r < n; ++r) {
        std::vector<double>& samples = per_rank[r];
        std::sort(samples.begin(), samples.end());
        // Nearest-rank 95th percentile.
        const std::size_t idx = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(samples.size()))) - 1;
        envelope.per_rank_q95[r] = samples[std::min(idx, samples.size() - 1)];
        double sum = 0.0;
        for (double s : samples) sum += s;
        envelope.per_rank_mean[r] = sum / static_cast<double>(samples.size());
    }
    return envelope;
}

std::vector<RankClass> classify_ranks(const SpectrumReport& observed, const NullEnvelope& null) {
    if (observed.normalized.size() != null.per_rank_q95.size()) {
        throw DataError("classify_ranks: spectrum and envelope dimensions differ");
    }
    std::vector<RankClass> out(observed.normalized.size());
    for (std::size_t r = 0; r < out.size(); ++r) {
        const double lambda = observed.normalized[r];
        if (lambda < 0.0) out[r] = RankClass::negative;
        else if (lambda > null.per_rank_q95[r] && lambda > 0.0) out[r] = RankClass::signal;
        else out[r] = RankClass::noise;
    }
    return out;
}

FitReport loading_threshold_fit(const std::vector<double>& loadings_pc1,
                                const std::vector<double>& thresholds) {
    const std::size_t n = loadings_pc1.size();
    if (n != thresholds.size()) throw DataError("loading_threshold_fit: length mismatch");
    if (n < 4) throw DataError("loading_threshold_fit: need at least 4 models");

    const double tau0 = thresholds.front();
    bool all_equal = true;
    for (double t : thresholds) {
        if (t != tau0) {
            all_equal = false;
            break;
        }
    }
    if (all_equal) {
        throw NumericalError("loading_threshold_fit: degenerate fit, all thresholds equal");
    }

    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) y(i) = loadings_pc1[i];
    const double y_mean = y.mean();
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss_tot += (y(i) - y_mean) * (y(i) - y_mean);

    auto fit = [&](int degree, double* coeffs) -> double {
        Eigen::MatrixXd design(n, degree + 1);
        for (std::size_t i = 0; i < n; ++i) {
            double p = 1.0;
            for (int d = 0; d <= degree; ++d) {
                design(i, d) = p;
                p *= thresholds[i];
            }
        }
        Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
        for (int d = 0; d <= degree; ++d) coeffs[d] = beta(d);
        const double ss_res = (y - design * beta).squaredNorm();
        if (ss_tot <= 1e-300) return ss_res <= 1e-300 ? 1.0 : 0.0;
        return 1.0 - ss_res / ss_tot;
    };

    FitReport report;
    report.linear_r2 = fit(1, report.linear_coeffs);
    report.quad_r2 = fit(2, report.quad_coeffs);
    return report;
}

}  // namespace metacal
