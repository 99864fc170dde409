#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "envmarket/nig.hpp"
#include "envmarket/transform.hpp"

// Conditional-volatility model fitting by maximum likelihood: a constant-plus-
// lagged-innovation mean equation with ARCH(1), GARCH(1,1) or EGARCH(1,1)
// variance dynamics, under standard-normal or standardized-NIG innovations.

namespace envmarket {

enum class VolFamily { arch1, garch11, egarch11 };
enum class InnovationKind { normal, nig };
enum class MeanKind { constant_ma1, ar1 };  // default: constant + theta1*z_{t-1}

std::string to_string(VolFamily f);

struct MeanSpec {
  MeanKind kind = MeanKind::constant_ma1;
  double phi0 = 0.0;
  double theta1 = 0.0;  // |theta1| < 1
};

struct VolSpec {
  VolFamily family = VolFamily::garch11;
  // ARCH(1)/GARCH(1,1): sigma^2_t = alpha0 + alpha1 z^2_{t-1} + beta1 sigma^2_{t-1}
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double beta1 = 0.0;
  // EGARCH(1,1): ln sigma^2_t = omega + beta_e ln sigma^2_{t-1}
  //              + alpha_e (|eps_{t-1}| - E|eps|) + gamma_asym eps_{t-1}
  double omega = 0.0;
  double alpha_e = 0.0;
  double gamma_asym = 0.0;
  double beta_e = 0.0;

  int param_count() const;
  double unconditional_variance(double fallback) const;
};

struct FittedModel {
  MeanSpec mean;
  VolSpec vol;
  InnovationKind innovation = InnovationKind::normal;
  NigParams nig;  // standardized innovation law when innovation == nig
  double log_likelihood = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  Eigen::VectorXd residuals;     // standardized innovations eps_t
  Eigen::VectorXd variances;     // filtered sigma^2_t
  double last_variance = 0.0;    // sigma^2_n
  double last_z = 0.0;
  double last_return = 0.0;
  int n = 0;
  std::vector<std::string> warnings;

  /// sigma^2_{n+1} from the fitted recursion.
  double one_step_variance() const;
  /// Conditional mean of R_{n+1} given the filtered state (innovation mean 0).
  double one_step_mean() const;
};

/// Mean absolute value of the innovation law (used by the EGARCH recursion).
double innovation_abs_mean(InnovationKind kind, const NigParams& nig);

struct FilterResult {
  Eigen::VectorXd z;       // mean-equation innovations
  Eigen::VectorXd sigma2;  // conditional variances
};

/// Run the mean/volatility recursions over a return series.
FilterResult filter_series(const MeanSpec& mean, const VolSpec& vol,
                           const Eigen::VectorXd& returns, double abs_mean_eps);

/// Total conditional log-likelihood of the series under the given model.
double model_loglik(const MeanSpec& mean, const VolSpec& vol,
                    InnovationKind innovation, const NigParams& nig,
                    const Eigen::VectorXd& returns);

/// AIC = 2k - 2l; BIC = k ln(n) - 2l.
std::pair<double, double> information_criteria(double log_likelihood, int k, int n);

FittedModel fit_model(const Eigen::VectorXd& returns, VolFamily family,
                      InnovationKind innovation = InnovationKind::normal,
                      MeanKind mean_kind = MeanKind::constant_ma1);

inline FittedModel fit_model(const ReturnSeries& returns, VolFamily family,
                             InnovationKind innovation = InnovationKind::normal) {
  return fit_model(returns.values, family, innovation);
}

enum class SelectionCriterion { aic, bic };

struct SelectionResult {
  VolFamily family = VolFamily::arch1;
  FittedModel model;
  std::vector<std::pair<VolFamily, FittedModel>> candidates;  // converged fits
  std::vector<std::string> warnings;
};

/// Fit all three families and keep the one with the minimal criterion.
/// Ties break toward fewer parameters, then ARCH1 < GARCH11 < EGARCH11.
SelectionResult select_model(const Eigen::VectorXd& returns,
                             SelectionCriterion criterion,
                             InnovationKind innovation = InnovationKind::normal);

}  // namespace envmarket
