#pragma once

#include <Eigen/Dense>
#include <functional>

// Scalar special functions, root finding and small-dimension smooth
// optimization used across the library.

namespace envmarket::num {

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Standard normal CDF.
double norm_cdf(double x);

/// Standard normal quantile (inverse CDF), valid on (0, 1).
double norm_ppf(double p);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of a t statistic with df degrees of freedom.
double student_t_pvalue(double t, double df);

/// Upper tail of the chi-squared distribution.
double chi2_sf(double x, double df);

/// log K_1(x), modified Bessel function of the second kind, order one.
/// Uses the asymptotic expansion where cyl_bessel_k underflows.
double log_bessel_k1(double x);

/// Bracketed root finding (Brent). f(lo) and f(hi) must have opposite signs.
double brent_root(const std::function<double(double)>& f, double lo, double hi,
                  double xtol = 1e-14, double ftol = 0.0, int max_iter = 200);

/// Central finite-difference gradient with per-coordinate relative step.
Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double rel_step = 1e-6);

struct MinimizeResult {
  Eigen::VectorXd x;
  double fval = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Nelder-Mead simplex minimization.
MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                           double step = 0.1, int max_iter = 2000,
                           double ftol = 1e-12);

/// BFGS with numerical gradients and backtracking line search.
MinimizeResult bfgs(const Objective& f, const Eigen::VectorXd& x0,
                    int max_iter = 500, double gtol = 1e-8);

/// Damped Newton refinement with finite-difference derivatives. Keeps the
/// iterate strictly inside [lower, upper] when bounds are supplied.
MinimizeResult newton_polish(const Objective& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, int max_iter = 40,
                             double gtol = 1e-10);

}  // namespace envmarket::num
