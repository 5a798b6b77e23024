#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace metacal {

// L2-regularized logistic regression. The objective is
//   mean NLL + ||w||^2 / (2 c n)
// with the intercept unpenalized; features are standardized with statistics
// from the fitting data.
struct LogisticModel {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    double regularization_c = 1.0;
    Eigen::VectorXd feature_mean;
    Eigen::VectorXd feature_sd;
    int iterations = 0;
    double final_grad_norm = 0.0;

    double predict_prob(const Eigen::VectorXd& x) const;
    Eigen::VectorXd predict_probs(const Eigen::MatrixXd& X) const;
};

// Loss and gradient on an already-prepared design matrix (no
// standardization), exposed for finite-difference checks. The gradient is
// packed as [dw..., db].
double logistic_loss(const Eigen::MatrixXd& X, const std::vector<int>& y,
                     const Eigen::VectorXd& w, double b, double c);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                  const Eigen::VectorXd& w, double b, double c);

// Damped Newton fit to gradient norm <= tol; throws NumericalError with the
// final gradient norm if the iteration cap is hit.
LogisticModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& y, double c,
                           int max_iterations = 500, double tol = 1e-6);

struct CvResult {
    std::vector<double> out_of_fold_probs;  // NaN where a fold was skipped
    std::vector<int> fold_assignment;
    double auc = 0.0;
    std::vector<std::string> fold_errors;
    double coverage = 1.0;  // scored trials / all trials
};

// Grouped k-fold: groups sorted by size (ties by id) and dealt round-robin,
// so folds are deterministic without a seed. Passing shuffle_seed instead
// deals a seeded random permutation of the groups. Trials sharing a group
// never straddle train/test.
CvResult grouped_cv(const Eigen::MatrixXd& X, const std::vector<int>& y,
                    const std::vector<std::string>& groups, int k, double c,
                    std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// Rank-sum AUC with exact tie handling: P(s+ > s-) + 0.5 P(tie).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct Dataset {
    Eigen::MatrixXd X;
    std::vector<int> y;
    std::vector<std::string> groups;
    std::vector<std::string> feature_names;
};

struct TransferResult {
    std::vector<std::string> benchmarks;
    Eigen::MatrixXd auc;  // trained on row, tested on column; diagonal via grouped_cv
};

TransferResult transfer_matrix(const std::vector<std::pair<std::string, Dataset>>& datasets,
                               int k, double c);

}  // namespace metacal
