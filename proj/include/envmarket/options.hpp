#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "envmarket/garch.hpp"

// Risk-neutral option pricing on an index level: per-step Esscher shift of
// the conditional NIG law, Monte Carlo over the fitted volatility recursion,
// and Black-Scholes implied-volatility surfaces.

namespace envmarket {

struct PricingJob {
  FittedModel model;          // innovation must be NIG
  double s0 = 1.0;            // spot level
  std::vector<double> rf;     // per-step rate; a single entry means flat
  std::vector<int> maturities; // step counts, each >= 1
  std::vector<double> strikes; // > 0
  Eigen::Index paths = 10000;
  std::uint64_t seed = 0;
  double lambda0 = 0.0;       // risk-premium constant in m_t
  bool antithetic = false;

  double rate_at(int step) const;       // r'_t, 1-based step
  double cum_rate(int steps) const;     // sum of the first `steps` rates
};

enum class OptionSide { call, put };

struct ImpliedVolResult {
  double sigma = 0.0;
  bool defined = false;
  bool at_upper = false;  // hit the sigma = 5 bracket end
};

struct OptionSurface {
  std::vector<int> maturities;
  std::vector<double> strikes;
  Eigen::MatrixXd call, put;          // |T| x |K|
  Eigen::MatrixXd call_se, put_se;    // MC standard errors
  Eigen::MatrixXd moneyness;          // S0 / K
  Eigen::MatrixXd implied_vol;        // NaN where undefined
};

/// Solve ln MGF(1+theta) - ln MGF(theta) = r'_t for the conditional NIG law
/// at conditional stdev sigma_t. Throws when no admissible bracket or no sign
/// change exists.
double esscher_shift(const FittedModel& model, double sigma_t, double rf_step,
                     double lambda0 = 0.0);

/// Terminal index levels under Q: paths x |maturities|, deterministic in the
/// seed. The Esscher shift is applied at every step; the initial variance is
/// the fitted one-step-ahead forecast.
Eigen::MatrixXd simulate_risk_neutral(const PricingJob& job);

/// Discounted-mean call/put prices with per-cell MC standard errors
/// (implied vols left unset).
OptionSurface price_options(const Eigen::MatrixXd& levels, const PricingJob& job);

/// Black-Scholes price; tau in steps, rate per step.
double black_scholes(OptionSide side, double s0, double k, double sigma,
                     double tau, double rate);

/// Invert Black-Scholes by bisection on sigma in [1e-6, 5] to 1e-8 in price.
/// Below-band prices come back undefined; prices at or above the upper
/// bracket value return sigma = 5 with at_upper set.
ImpliedVolResult implied_vol(double price, double s0, double k, int steps,
                             double rf_step, OptionSide side);

/// simulate_risk_neutral + price_options + per-cell implied vols.
OptionSurface price_surface(const PricingJob& job);

}  // namespace envmarket
