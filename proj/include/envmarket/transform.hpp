#pragma once

#include <Eigen/Dense>
#include <string>

#include "envmarket/index.hpp"

// Exponential map of DEI levels onto (0, 1] and log returns of the mapped
// series.

namespace envmarket {

struct TransformParams {
  double a = 0.0;      // positive scale
  double b = 0.0;      // positive rate
  double eps_min = 0.0;  // value assigned at the minimum level

  double apply(double x) const;          // a * exp(b * x)
  double invert(double f) const;         // level recovering apply(level) = f
};

struct ReturnSeries {
  std::string country;
  int first_year = 0;        // year of the first return (t1 of the level series)
  Eigen::VectorXd values;    // length = level-series length - 1
};

/// Solve f(min) = eps_min, f(max) = 1 exactly for f(x) = a exp(bx).
/// Requires max > min and 0 < eps_min < 1.
TransformParams fit_exponential_map(double min_level, double max_level,
                                    double eps_min = 1e-3);

/// Convenience overload pooling the min/max over the given levels.
TransformParams fit_exponential_map(const Eigen::VectorXd& levels,
                                    double eps_min = 1e-3);

/// R_t = ln(f(x_t) / f(x_{t-1})) = b * (x_t - x_{t-1}).
ReturnSeries log_returns(const IndexSeries& series, const TransformParams& p);

}  // namespace envmarket
