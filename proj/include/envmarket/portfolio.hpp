#pragma once

#include <Eigen/Dense>
#include <vector>

// Mean-variance and mean-CVaR efficient frontiers over the simplex
// (optionally sign-unconstrained), plus the dense simplex LP solver backing
// the CVaR optimization.

namespace envmarket {

struct LpResult {
  enum class Status { optimal, infeasible, unbounded };
  Status status = Status::optimal;
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// min c'x subject to Ax = b, x >= 0. Two-phase dense simplex with Bland's
/// rule; adequate at the problem sizes that arise here (master problems with
/// tens of rows).
LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                  const Eigen::VectorXd& b);

enum class RiskMeasure { variance, cvar };

struct FrontierPoint {
  double gamma = 0.0;
  Eigen::VectorXd weights;
  double expected_return = 0.0;
  double risk = 0.0;  // value of the chosen risk measure
  RiskMeasure measure = RiskMeasure::variance;
  double cvar_level = 0.0;  // q, cvar measure only
  bool ridge_applied = false;
};

/// gamma in {0, 0.01, ..., 0.99}.
std::vector<double> default_gamma_grid();

/// For each gamma maximize gamma E(r_p) - (1 - gamma) Var(r_p) over
/// {sum w = 1} (and w >= 0 when long_only). Exact KKT solution: active-set
/// support enumeration for small L, iterative active set otherwise.
std::vector<FrontierPoint> mean_variance_frontier(const Eigen::MatrixXd& returns,
                                                  const std::vector<double>& gammas,
                                                  bool long_only = true);

/// For each gamma maximize gamma E(r_p) - (1 - gamma) CVaR_q(r_p) over the
/// simplex via cutting planes on the Rockafellar-Uryasev epigraph; each cut
/// master is a dense-simplex LP. Terminates with primal-dual gap < 1e-9.
/// CVaR follows the empirical worst-ceil(qS) convention used everywhere else.
std::vector<FrontierPoint> mean_cvar_frontier(const Eigen::MatrixXd& scenarios,
                                              double level,
                                              const std::vector<double>& gammas,
                                              bool long_only = true);

/// Empirical CVaR of portfolio returns (loss scale), worst ceil(qS) rows.
double portfolio_cvar(const Eigen::MatrixXd& scenarios, const Eigen::VectorXd& w,
                      double level);

}  // namespace envmarket
