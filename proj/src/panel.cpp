#include "envmarket/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace envmarket {

namespace {

const double kMissing = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_value(const std::string& raw, const std::string& where) {
  std::string s = trim(raw);
  if (s.empty()) return kMissing;
  size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw PanelError("non-numeric value '" + s + "' at " + where);
  }
  if (pos != s.size())
    throw PanelError("non-numeric value '" + s + "' at " + where);
  return v;
}

int parse_year(const std::string& raw, const std::string& where) {
  std::string s = trim(raw);
  try {
    size_t pos = 0;
    int y = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return y;
  } catch (const std::exception&) {
    throw PanelError("bad year '" + s + "' at " + where);
  }
}

IndicatorId make_indicator(const std::string& code,
                           const std::vector<IndicatorId>& dictionary) {
  for (const auto& d : dictionary)
    if (d.code == code) return d;
  IndicatorId id;
  id.code = code;
  return id;
}

struct Cell {
  std::string country;
  std::string indicator;
  int year;
  double value;
};

IndicatorPanel assemble(const std::vector<Cell>& cells,
                        const std::vector<std::string>& country_order,
                        const std::vector<std::string>& indicator_order,
                        const std::vector<IndicatorId>& dictionary) {
  if (cells.empty()) throw PanelError("empty panel");
  int ymin = cells.front().year, ymax = ymin;
  for (const auto& c : cells) {
    ymin = std::min(ymin, c.year);
    ymax = std::max(ymax, c.year);
  }
  IndicatorPanel p;
  p.countries = country_order;
  for (const auto& code : indicator_order)
    p.indicators.push_back(make_indicator(code, dictionary));
  p.year_start = ymin;
  p.values.assign(size_t(ymax - ymin + 1),
                  Eigen::MatrixXd::Constant(Eigen::Index(indicator_order.size()),
                                            Eigen::Index(country_order.size()),
                                            kMissing));
  for (const auto& c : cells) {
    Eigen::Index l = p.country_index(c.country);
    Eigen::Index k = p.indicator_index(c.indicator);
    double& slot = p.value(k, l, c.year);
    if (!IndicatorPanel::is_missing(slot))
      throw PanelError("duplicate cell (" + c.country + ", " + c.indicator +
                       ", " + std::to_string(c.year) + ")");
    slot = c.value;
  }
  return p;
}

void append_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

Eigen::Index IndicatorPanel::country_index(const std::string& code) const {
  auto it = std::find(countries.begin(), countries.end(), code);
  if (it == countries.end()) throw PanelError("unknown country '" + code + "'");
  return Eigen::Index(it - countries.begin());
}

Eigen::Index IndicatorPanel::indicator_index(const std::string& code) const {
  for (size_t i = 0; i < indicators.size(); ++i)
    if (indicators[i].code == code) return Eigen::Index(i);
  throw PanelError("unknown indicator '" + code + "'");
}

Eigen::Index IndicatorPanel::gdp_index() const {
  Eigen::Index found = -1;
  for (size_t i = 0; i < indicators.size(); ++i) {
    if (indicators[i].kind == IndicatorKind::gdp) {
      if (found >= 0) throw PanelError("multiple gdp indicators in panel");
      found = Eigen::Index(i);
    }
  }
  if (found < 0) throw PanelError("panel has no gdp indicator");
  return found;
}

bool IndicatorPanel::complete(Eigen::Index l, int year) const {
  const auto& slab = values.at(size_t(year - year_start));
  for (Eigen::Index k = 0; k < slab.rows(); ++k)
    if (is_missing(slab(k, l))) return false;
  return true;
}

IndicatorPanel load_panel(std::istream& in, PanelFormat format,
                          const std::vector<IndicatorId>& dictionary) {
  std::string line;
  if (!std::getline(in, line)) throw PanelError("empty input");
  auto header = split_csv_line(trim(line));
  std::vector<Cell> cells;
  std::vector<std::string> country_order, indicator_order;

  if (format == PanelFormat::long_csv) {
    if (header.size() != 4 || trim(header[0]) != "country" ||
        trim(header[1]) != "indicator" || trim(header[2]) != "year" ||
        trim(header[3]) != "value")
      throw PanelError("malformed long-csv header (expected country,indicator,year,value)");
    int row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (trim(line).empty()) continue;
      auto f = split_csv_line(line);
      if (f.size() != 4)
        throw PanelError("row " + std::to_string(row) + ": expected 4 fields");
      std::string where = "row " + std::to_string(row);
      Cell c{trim(f[0]), trim(f[1]), parse_year(f[2], where),
             parse_value(f[3], where)};
      append_unique(country_order, c.country);
      append_unique(indicator_order, c.indicator);
      cells.push_back(c);
    }
  } else {
    if (header.size() < 3 || trim(header[0]) != "country" ||
        trim(header[1]) != "indicator")
      throw PanelError("malformed wide-csv header (expected country,indicator,<years>)");
    std::vector<int> years;
    for (size_t i = 2; i < header.size(); ++i)
      years.push_back(parse_year(header[i], "header column " + std::to_string(i + 1)));
    for (size_t i = 1; i < years.size(); ++i)
      if (years[i] != years[i - 1] + 1)
        throw PanelError("wide-csv year columns must be contiguous and ascending");
    int row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (trim(line).empty()) continue;
      auto f = split_csv_line(line);
      if (f.size() != 2 + years.size())
        throw PanelError("row " + std::to_string(row) + ": expected " +
                         std::to_string(2 + years.size()) + " fields");
      std::string country = trim(f[0]), indicator = trim(f[1]);
      append_unique(country_order, country);
      append_unique(indicator_order, indicator);
      for (size_t i = 0; i < years.size(); ++i) {
        std::string where =
            "row " + std::to_string(row) + ", column " + std::to_string(i + 3);
        cells.push_back({country, indicator, years[i], parse_value(f[2 + i], where)});
      }
    }
  }
  return assemble(cells, country_order, indicator_order, dictionary);
}

void write_panel(const IndicatorPanel& panel, std::ostream& out, PanelFormat format) {
  out.precision(17);
  if (format == PanelFormat::long_csv) {
    out << "country,indicator,year,value\n";
    for (Eigen::Index l = 0; l < panel.country_count(); ++l)
      for (Eigen::Index k = 0; k < panel.indicator_count(); ++k)
        for (int y = panel.year_start; y <= panel.year_end(); ++y) {
          out << panel.countries[size_t(l)] << ','
              << panel.indicators[size_t(k)].code << ',' << y << ',';
          double v = panel.value(k, l, y);
          if (!IndicatorPanel::is_missing(v)) out << v;
          out << '\n';
        }
  } else {
    out << "country,indicator";
    for (int y = panel.year_start; y <= panel.year_end(); ++y) out << ',' << y;
    out << '\n';
    for (Eigen::Index l = 0; l < panel.country_count(); ++l)
      for (Eigen::Index k = 0; k < panel.indicator_count(); ++k) {
        out << panel.countries[size_t(l)] << ','
            << panel.indicators[size_t(k)].code;
        for (int y = panel.year_start; y <= panel.year_end(); ++y) {
          out << ',';
          double v = panel.value(k, l, y);
          if (!IndicatorPanel::is_missing(v)) out << v;
        }
        out << '\n';
      }
  }
}

IndicatorPanel validate_positivity(const IndicatorPanel& panel,
                                   PositivityPolicy policy, double eps_pos,
                                   std::vector<FlooredCell>* log) {
  IndicatorPanel out = panel;
  for (int y = out.year_start; y <= out.year_end(); ++y)
    for (Eigen::Index k = 0; k < out.indicator_count(); ++k)
      for (Eigen::Index l = 0; l < out.country_count(); ++l) {
        double v = out.value(k, l, y);
        if (IndicatorPanel::is_missing(v) || v > 0.0) continue;
        if (policy == PositivityPolicy::reject)
          throw PanelError("nonpositive value " + std::to_string(v) + " at (" +
                           out.countries[size_t(l)] + ", " +
                           out.indicators[size_t(k)].code + ", " +
                           std::to_string(y) + ")");
        if (log)
          log->push_back({out.countries[size_t(l)],
                          out.indicators[size_t(k)].code, y, v});
        out.value(k, l, y) = eps_pos;
      }
  return out;
}

IndicatorPanel select_window(const IndicatorPanel& panel, int start, int end) {
  if (start > end || start < panel.year_start || end > panel.year_end())
    throw PanelError("window [" + std::to_string(start) + ", " +
                     std::to_string(end) + "] outside panel range [" +
                     std::to_string(panel.year_start) + ", " +
                     std::to_string(panel.year_end()) + "]");
  IndicatorPanel out;
  out.countries = panel.countries;
  out.indicators = panel.indicators;
  out.year_start = start;
  out.values.assign(panel.values.begin() + (start - panel.year_start),
                    panel.values.begin() + (end - panel.year_start + 1));
  return out;
}

std::vector<IndicatorId> load_indicator_dictionary(std::istream& in) {
  nlohmann::json j;
  in >> j;
  std::vector<IndicatorId> out;
  for (const auto& e : j) {
    IndicatorId id;
    id.code = e.at("code").get<std::string>();
    id.description = e.value("description", "");
    id.units = e.value("units", "");
    std::string kind = e.value("kind", "environmental");
    if (kind == "gdp") id.kind = IndicatorKind::gdp;
    else if (kind == "economic") id.kind = IndicatorKind::economic;
    else id.kind = IndicatorKind::environmental;
    out.push_back(id);
  }
  return out;
}

std::vector<IndicatorId> load_indicator_dictionary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PanelError("cannot open indicator dictionary '" + path + "'");
  return load_indicator_dictionary(in);
}

}  // namespace envmarket
