#include "envmarket/transform.hpp"

#include <cmath>
#include <stdexcept>

namespace envmarket {

double TransformParams::apply(double x) const { return a * std::exp(b * x); }

double TransformParams::invert(double f) const {
  if (f <= 0.0) throw std::domain_error("transform invert: f must be positive");
  return (std::log(f) - std::log(a)) / b;
}

TransformParams fit_exponential_map(double min_level, double max_level,
                                    double eps_min) {
  if (!(min_level > 0.0) || !(max_level > min_level))
    throw std::domain_error("fit_exponential_map: need max > min > 0");
  if (!(eps_min > 0.0 && eps_min < 1.0))
    throw std::domain_error("fit_exponential_map: eps_min must lie in (0, 1)");
  TransformParams p;
  p.eps_min = eps_min;
  p.b = std::log(1.0 / eps_min) / (max_level - min_level);
  p.a = eps_min * std::exp(-p.b * min_level);
  return p;
}

TransformParams fit_exponential_map(const Eigen::VectorXd& levels, double eps_min) {
  if (levels.size() < 2)
    throw std::domain_error("fit_exponential_map: need at least 2 levels");
  return fit_exponential_map(levels.minCoeff(), levels.maxCoeff(), eps_min);
}

ReturnSeries log_returns(const IndexSeries& series, const TransformParams& p) {
  if (series.values.size() < 2)
    throw std::domain_error("log_returns: series too short");
  ReturnSeries r;
  r.country = series.country;
  r.first_year = series.year_start + 1;
  r.values.resize(series.values.size() - 1);
  for (Eigen::Index t = 1; t < series.values.size(); ++t)
    r.values[t - 1] =
        std::log(p.apply(series.values[t]) / p.apply(series.values[t - 1]));
  return r;
}

}  // namespace envmarket
