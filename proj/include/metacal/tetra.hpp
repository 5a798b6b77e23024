#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace metacal {

// Standard normal CDF.
double norm_cdf(double x);

// Standard normal density.
double norm_pdf(double x);

// Inverse standard normal CDF, absolute error below 1e-9 on (0, 1).
// Throws NumericalError at the boundaries {0, 1}; callers that need a
// boundary value apply the continuity correction documented in
// estimate_tetrachoric.
double probit(double p);

// Upper-orthant probability P(Z1 > h, Z2 > k) under a bivariate standard
// normal with correlation rho. Absolute error below 1e-8 over the full
// parameter range (Gauss-Legendre quadrature of the single-integral
// reduction, 6/12/20 nodes by |rho|).
double bvn_upper(double h, double k, double rho);

// 2x2 contingency table of paired binary outcomes.
// n11 = both yes, n10 = A yes / B no, n01 = A no / B yes, n00 = both no.
struct ContingencyTable2x2 {
    std::int64_t n11 = 0;
    std::int64_t n10 = 0;
    std::int64_t n01 = 0;
    std::int64_t n00 = 0;

    std::int64_t total() const { return n11 + n10 + n01 + n00; }
    ContingencyTable2x2 transposed() const { return {n11, n01, n10, n00}; }
};

struct TetraEstimate {
    double rho = 0.0;
    bool clamped = false;
};

inline constexpr double kRhoClamp = 1.0 - 1e-6;

// Tetrachoric correlation of a 2x2 table: thresholds are fixed from the
// table marginals, then rho is solved so the model's both-yes orthant
// probability matches n11/n (bracketed bisection refined by secant steps,
// tolerance 1e-6 in rho).
//
// Degenerate inputs follow two declared conventions, both reported through
// the clamped flag: a zero marginal adds 0.5 to every cell before
// estimation; a both-yes rate at or beyond its Frechet bound clamps rho to
// +/-(1 - 1e-6).
TetraEstimate estimate_tetrachoric(const ContingencyTable2x2& table);

// Model x model tetrachoric correlation matrix.
struct TetrachoricMatrix {
    std::vector<std::string> model_ids;
    Eigen::MatrixXd rho;                    // symmetric, unit diagonal
    std::vector<double> thresholds;         // tau_i = probit(yes-rate_i)
    Eigen::MatrixXi n_pairs;                // pairwise-complete item counts
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> clamped;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> missing;  // zero-overlap pairs

    bool has_missing() const { return missing.any(); }
    int n_models() const { return static_cast<int>(model_ids.size()); }
};

struct JudgementMatrix;
struct Warning;

// Assembles the pairwise tetrachoric matrix over pairwise-complete items.
// Thresholds come from full-column marginals; zero-overlap pairs are marked
// missing and reported as warnings.
TetrachoricMatrix tetrachoric_matrix(const JudgementMatrix& matrix,
                                     std::vector<Warning>* warnings = nullptr);

}  // namespace metacal
