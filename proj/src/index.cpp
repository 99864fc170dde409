#include "envmarket/index.hpp"

#include <cmath>

namespace envmarket {

Eigen::MatrixXd normalize(const IndicatorPanel& panel, int year) {
  if (panel.country_count() < 2)
    throw PanelError("normalization needs at least 2 countries");
  const auto& slab = panel.values.at(size_t(year - panel.year_start));
  for (Eigen::Index k = 0; k < slab.rows(); ++k)
    for (Eigen::Index l = 0; l < slab.cols(); ++l) {
      double v = slab(k, l);
      if (IndicatorPanel::is_missing(v))
        throw PanelError("missing value at (" + panel.countries[size_t(l)] +
                         ", " + panel.indicators[size_t(k)].code + ", " +
                         std::to_string(year) + ")");
      if (v <= 0.0)
        throw PanelError("nonpositive value at (" + panel.countries[size_t(l)] +
                         ", " + panel.indicators[size_t(k)].code + ", " +
                         std::to_string(year) + ")");
    }
  Eigen::VectorXd row_sums = slab.rowwise().sum();
  return slab.array().colwise() / row_sums.array();
}

Eigen::VectorXd environmental_index(const Eigen::MatrixXd& normalized,
                                    const std::vector<IndicatorId>& indicators,
                                    GdpPolicy policy) {
  if (Eigen::Index(indicators.size()) != normalized.rows())
    throw PanelError("indicator list does not match normalized matrix");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(normalized.cols());
  int used = 0;
  for (Eigen::Index k = 0; k < normalized.rows(); ++k) {
    bool is_gdp = indicators[size_t(k)].kind == IndicatorKind::gdp;
    if (policy == GdpPolicy::exclude_gdp_divide_by_K_minus_1 && is_gdp) continue;
    sum += normalized.row(k).transpose();
    ++used;
  }
  if (used == 0) throw PanelError("no indicators selected for EI");
  return sum / double(used);
}

EiTable environmental_index_table(const IndicatorPanel& panel, GdpPolicy policy) {
  EiTable t;
  t.countries = panel.countries;
  t.year_start = panel.year_start;
  t.values.resize(panel.year_count(), panel.country_count());
  for (int y = panel.year_start; y <= panel.year_end(); ++y) {
    Eigen::MatrixXd fn = normalize(panel, y);
    t.values.row(y - panel.year_start) =
        environmental_index(fn, panel.indicators, policy).transpose();
  }
  return t;
}

std::vector<IndexSeries> dollarize(const EiTable& ei, const IndicatorPanel& panel) {
  Eigen::Index gdp_k = panel.gdp_index();
  std::vector<IndexSeries> out;
  for (Eigen::Index l = 0; l < Eigen::Index(ei.countries.size()); ++l) {
    IndexSeries s;
    s.country = ei.countries[size_t(l)];
    s.year_start = ei.year_start;
    s.values.resize(ei.values.rows());
    Eigen::Index pl = panel.country_index(s.country);
    for (Eigen::Index t = 0; t < ei.values.rows(); ++t) {
      int year = ei.year_start + int(t);
      double gdp = panel.value(gdp_k, pl, year);
      if (IndicatorPanel::is_missing(gdp))
        throw PanelError("GDP missing for (" + s.country + ", " +
                         std::to_string(year) + ")");
      s.values[t] = gdp * ei.values(t, l);
    }
    out.push_back(std::move(s));
  }
  return out;
}

IndexSeries global_index(const std::vector<IndexSeries>& deis) {
  if (deis.empty()) throw PanelError("global_index: no series");
  IndexSeries g;
  g.country = kGlobalCode;
  g.year_start = deis.front().year_start;
  g.values = Eigen::VectorXd::Zero(deis.front().values.size());
  for (const auto& s : deis) {
    if (s.year_start != g.year_start || s.values.size() != g.values.size())
      throw PanelError("global_index: mismatched year axes");
    g.values += s.values;
  }
  g.values /= double(deis.size());
  return g;
}

}  // namespace envmarket
