#pragma once

#include <Eigen/Dense>
#include <cstdint>

// Normal-inverse Gaussian distribution: density, moment-generating function,
// sampling via the inverse-Gaussian mean-variance mixture, and maximum
// likelihood fitting. This is the lambda = -1/2 member of the generalized
// hyperbolic family; lambda is fixed and never estimated.

namespace envmarket {

struct NigParams {
  double alpha = 1.0;  // tail heaviness, > 0
  double beta = 0.0;   // asymmetry, |beta| < alpha
  double delta = 1.0;  // scale, > 0
  double mu = 0.0;     // location

  double gamma_bar() const;  // sqrt(alpha^2 - beta^2)
  bool valid() const;

  double mean() const;      // mu + delta*beta/gamma_bar
  double variance() const;  // delta*alpha^2/gamma_bar^3
  double skewness() const;
  double excess_kurtosis() const;

  /// Subordinator decomposition X = mu + beta*Z + sqrt(Z)*N with
  /// Z ~ IG(subordinator_mean, subordinator_shape).
  double subordinator_mean() const { return delta / gamma_bar(); }
  double subordinator_shape() const { return delta * delta; }
};

double nig_logpdf(const NigParams& p, double x);
double nig_pdf(const NigParams& p, double x);

/// MGF(u) = exp(mu*u + delta*(gamma_bar - sqrt(alpha^2 - (beta+u)^2))).
/// Defined only for |beta + u| < alpha.
double nig_mgf(const NigParams& p, double u);
double nig_log_mgf(const NigParams& p, double u);

/// i.i.d. draws, deterministic for a given (seed, stream).
Eigen::VectorXd sample_nig(const NigParams& p, Eigen::Index n,
                           std::uint64_t seed, std::uint64_t stream = 0);

/// MLE with moment-matched initialization. Needs n >= 8 and nonzero variance.
NigParams fit_nig(const Eigen::VectorXd& samples);

/// NIG with unit variance and zero mean from the two free shape parameters:
/// delta and mu are pinned by the standardization constraints.
NigParams standardized_nig(double alpha, double beta);

}  // namespace envmarket
