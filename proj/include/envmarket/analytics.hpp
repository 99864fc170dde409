#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

// Regression (OLS and robust IRLS), CAPM alpha, and risk/performance ratios.

namespace envmarket {

enum class RegressionMethod { ols, robust_irls };

struct RegressionResult {
  double alpha = 0.0;       // intercept
  double beta = 0.0;        // slope
  double alpha_pvalue = 1.0;
  double beta_pvalue = 1.0;
  double adjusted_r2 = 0.0;
  RegressionMethod method = RegressionMethod::ols;
  Eigen::VectorXd weights;  // final IRLS weights (robust only)
  bool converged = true;
  bool pvalues_approximate = false;  // IRLS p-values are approximate
};

/// Closed-form simple least squares with t-test p-values (n - 2 df).
RegressionResult ols(const Eigen::VectorXd& y, const Eigen::VectorXd& x);

/// Iteratively reweighted least squares with Tukey bisquare weights.
/// Residuals are scaled by MAD/0.6745; default tuning 4.685.
RegressionResult robust_regress(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                                double tuning = 4.685, int max_iter = 100,
                                double tol = 1e-10);

struct CapmResult {
  double alpha = 0.0;
  double beta = 0.0;
  RegressionResult regression;
};

/// CAPM excess-return regression (asset - rf on market - rf), robust estimator.
CapmResult jensen_alpha(const Eigen::VectorXd& asset, const Eigen::VectorXd& market,
                        double rf);

/// Empirical VaR/CVaR on the loss scale: the worst ceil(q n) observations.
struct VarCvar {
  double var = 0.0;
  double cvar = 0.0;
};
VarCvar var_cvar(const Eigen::VectorXd& returns, double q);

/// (mean - rf) / stdev. Throws on zero standard deviation.
double sharpe(const Eigen::VectorXd& returns, double rf);

/// (mean - target) / downside deviation. Throws when no observation lies
/// below the target (undefined, not infinite).
double sortino(const Eigen::VectorXd& returns, double target);

/// Expected tail gain over expected tail loss at the given tail levels.
double rachev(const Eigen::VectorXd& returns, double rf, double alpha_tail = 0.5,
              double beta_tail = 0.5);

struct RatioReport {
  std::string country;
  double sharpe = 0.0;
  double sortino = 0.0;
  bool sortino_defined = true;
  double rachev = 0.0;
  double jensen_alpha = 0.0;
  double var = 0.0;
  double cvar = 0.0;
};

}  // namespace envmarket
