#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "envmarket/panel.hpp"

// Cross-country normalization, per-country environmental indices, their
// dollar-denominated versions and the global average index.

namespace envmarket {

inline const std::string kGlobalCode = "GLOBAL";

/// Per-country yearly index values (USD for DEI series).
struct IndexSeries {
  std::string country;
  int year_start = 0;
  Eigen::VectorXd values;

  int year_end() const { return year_start + int(values.size()) - 1; }
};

/// EI values per (year, country), each strictly inside (0, 1).
struct EiTable {
  std::vector<std::string> countries;
  int year_start = 0;
  Eigen::MatrixXd values;  // years x L
};

enum class GdpPolicy {
  exclude_gdp_divide_by_K_minus_1,  // default: GDP enters only via dollarize
  include_all_divide_by_K,          // literal every-indicator average
};

/// Cross-country shares for one year: each indicator row divided by its
/// cross-country sum. Every value in scope must be present and positive.
Eigen::MatrixXd normalize(const IndicatorPanel& panel, int year);

/// Arithmetic mean of the selected normalized indicators per country.
Eigen::VectorXd environmental_index(const Eigen::MatrixXd& normalized,
                                    const std::vector<IndicatorId>& indicators,
                                    GdpPolicy policy);

/// EI for every year in the panel window.
EiTable environmental_index_table(const IndicatorPanel& panel, GdpPolicy policy);

/// DEI_t(l) = GDP_t(l) * EI_t(l), one series per country.
std::vector<IndexSeries> dollarize(const EiTable& ei, const IndicatorPanel& panel);

/// Equally weighted average of the country DEI series.
IndexSeries global_index(const std::vector<IndexSeries>& deis);

}  // namespace envmarket
