#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "envmarket/garch.hpp"
#include "envmarket/nig.hpp"
#include "envmarket/transform.hpp"

// Joint one-period-ahead scenario generation with multivariate NIG
// innovations: per-country marginals mixed through a shared inverse-Gaussian
// subordinator and a correlated Gaussian vector.

namespace envmarket {

enum class Measure { real_world, risk_neutral };

struct ScenarioMatrix {
  std::vector<std::string> countries;
  Eigen::MatrixXd returns;  // S x L
  Measure measure = Measure::real_world;
  std::uint64_t seed = 0;

  Eigen::Index scenario_count() const { return returns.rows(); }
};

struct MvNigSpec {
  std::vector<NigParams> marginals;   // one per country
  double shared_shape = 1.0;          // subordinator W ~ IG(1, shared_shape)
  Eigen::MatrixXd mixing_correlation; // L x L, PSD, unit diagonal
  bool psd_projected = false;         // true when the input needed projection

  Eigen::Index dimension() const { return Eigen::Index(marginals.size()); }

  /// Draw one joint innovation vector from the mixture.
  Eigen::VectorXd draw(class Rng& rng) const;

  /// Closed-form innovation moments of the mixture construction (used as the
  /// oracle for sampled scenarios; equal to the marginal NIG moments when the
  /// subordinator shapes coincide).
  double column_mean(Eigen::Index l) const;
  double column_variance(Eigen::Index l) const;
};

/// Marginals column-by-column, dependence from the residual correlation
/// matrix projected to the nearest PSD matrix with unit diagonal.
MvNigSpec fit_mvnig(const Eigen::MatrixXd& residuals);

/// One-step-ahead joint return scenarios: joint innovations pushed through
/// each country's fitted mean/volatility recursion. Deterministic in seed.
ScenarioMatrix sample_scenarios(const MvNigSpec& spec,
                                const std::vector<FittedModel>& models,
                                const std::vector<std::string>& countries,
                                Eigen::Index scenario_count, std::uint64_t seed);

/// Next-period levels: f_{t+1} = f_t e^R per scenario, mapped back to levels
/// through the inverse of the exponential transform.
Eigen::MatrixXd forward_levels(const Eigen::VectorXd& last_levels,
                               const ScenarioMatrix& scenarios,
                               const TransformParams& p);

/// Nearest symmetric PSD matrix with unit diagonal (eigenvalue clipping).
Eigen::MatrixXd nearest_psd_correlation(const Eigen::MatrixXd& m, bool* projected = nullptr);

}  // namespace envmarket
