#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "metacal/tetra.hpp"

namespace metacal {

struct JudgementMatrix;

// Full eigenstructure of a correlation matrix. Eigenvalues are stored
// descending; normalized entries are lambda_i / n_models and carry the sign
// of the eigenvalue, so the normalized spectrum sums to one even when the
// matrix is not PSD.
struct SpectrumReport {
    std::vector<double> eigenvalues;  // descending
    std::vector<double> normalized;   // lambda / n
    std::vector<double> cumulative;   // running sum of normalized
    std::vector<bool> negative_flags;
    Eigen::MatrixXd loadings;  // models x ranks, columns scaled by sqrt(max(lambda, 0))

    int n_ranks() const { return static_cast<int>(eigenvalues.size()); }
};

struct NullEnvelope {
    std::vector<double> per_rank_q95;  // normalized scale
    std::vector<double> per_rank_mean;
    int draws = 0;
    std::uint64_t seed = 0;
    int retries = 0;  // degenerate draws that were resampled
};

enum class RankClass { signal, noise, negative };

SpectrumReport eigenspectrum(const TetrachoricMatrix& corr);

// Parallel analysis: B column-shuffles of the judgement matrix (missingness
// pattern preserved), each re-estimated and eigendecomposed. Draw b uses
// substream (seed, b, attempt), so results do not depend on evaluation
// order.
NullEnvelope parallel_analysis(const JudgementMatrix& matrix, int draws, std::uint64_t seed);

std::vector<RankClass> classify_ranks(const SpectrumReport& observed, const NullEnvelope& null);

struct FitReport {
    double linear_r2 = 0.0;
    double quad_r2 = 0.0;
    double quad_coeffs[3] = {0.0, 0.0, 0.0};  // c0 + c1*tau + c2*tau^2
    double linear_coeffs[2] = {0.0, 0.0};
};

// OLS fits of PC1 loading on the probit threshold, linear and quadratic.
FitReport loading_threshold_fit(const std::vector<double>& loadings_pc1,
                                const std::vector<double>& thresholds);

// Column shuffle used by the null: permutes non-missing values within each
// column, leaving missing cells in place. Exposed for tests.
JudgementMatrix shuffle_columns(const JudgementMatrix& matrix, std::uint64_t seed,
                                std::uint64_t draw_index, std::uint64_t attempt);

}  // namespace metacal
