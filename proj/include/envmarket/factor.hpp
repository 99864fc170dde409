#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

// Maximum-likelihood factor analysis of the country-return matrix:
// EM-estimated loadings/uniquenesses, a likelihood-ratio adequacy test and
// regression-method factor scores.

namespace envmarket {

struct FactorModel {
  int m = 1;                         // factor count
  std::vector<std::string> countries;
  Eigen::MatrixXd loadings;          // L x m
  Eigen::VectorXd uniquenesses;      // length L, >= floor
  double log_likelihood = 0.0;
  double lr_statistic = 0.0;
  double lr_pvalue = 1.0;
  int lr_df = 0;
  bool converged = false;
  bool correlation_mode = true;
  std::vector<bool> heywood;         // uniqueness pinned at the floor
  Eigen::VectorXd column_means;      // of the fitted data
  Eigen::VectorXd column_sds;        // sample standard deviations

  Eigen::MatrixXd fitted_covariance() const;  // loadings loadings' + diag(uniq)
};

/// EM fit of the m-factor model to the sample correlation matrix (or the
/// covariance matrix when use_correlation is false). Uniquenesses are floored
/// at 0.005; ten deterministic restarts, best likelihood wins.
FactorModel ml_factor_fit(const Eigen::MatrixXd& returns, int m,
                          const std::vector<std::string>& countries = {},
                          bool use_correlation = true);

/// Countries sorted by uniqueness descending, ties by code.
std::vector<std::string> order_by_uniqueness(const FactorModel& model);

/// Regression-method scores per observation: beta' (beta beta' + D)^{-1}
/// applied to centered (and, in correlation mode, standardized) returns.
Eigen::MatrixXd factor_scores(const FactorModel& model,
                              const Eigen::MatrixXd& returns);

/// Varimax rotation of the loadings (optional post-processing).
Eigen::MatrixXd varimax(const Eigen::MatrixXd& loadings, int max_iter = 200,
                        double tol = 1e-10);

}  // namespace envmarket
