#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Country x indicator x year panels of world-development-indicator values.

namespace envmarket {

enum class IndicatorKind { environmental, economic, gdp };

struct IndicatorId {
  std::string code;
  std::string description;
  std::string units;
  IndicatorKind kind = IndicatorKind::environmental;
};

class PanelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Values are stored as one K x L matrix per year; missing cells are NaN.
struct IndicatorPanel {
  std::vector<std::string> countries;       // length L
  std::vector<IndicatorId> indicators;      // length K
  int year_start = 0;
  std::vector<Eigen::MatrixXd> values;      // one K x L slab per year

  int year_end() const { return year_start + int(values.size()) - 1; }
  int year_count() const { return int(values.size()); }
  Eigen::Index country_count() const { return Eigen::Index(countries.size()); }
  Eigen::Index indicator_count() const { return Eigen::Index(indicators.size()); }

  double value(Eigen::Index k, Eigen::Index l, int year) const {
    return values.at(size_t(year - year_start))(k, l);
  }
  double& value(Eigen::Index k, Eigen::Index l, int year) {
    return values.at(size_t(year - year_start))(k, l);
  }
  static bool is_missing(double v) { return std::isnan(v); }

  Eigen::Index country_index(const std::string& code) const;
  Eigen::Index indicator_index(const std::string& code) const;
  /// Index of the unique indicator with kind == gdp; throws if absent.
  Eigen::Index gdp_index() const;

  /// True when every indicator is present for (country, year).
  bool complete(Eigen::Index l, int year) const;
};

enum class PanelFormat { long_csv, wide_csv };

/// Parse `country,indicator,year,value` rows (long) or one row per
/// (country, indicator) with year columns (wide). Empty value fields become
/// missing markers. The dictionary, when given, supplies indicator metadata.
IndicatorPanel load_panel(std::istream& in, PanelFormat format,
                          const std::vector<IndicatorId>& dictionary = {});

void write_panel(const IndicatorPanel& panel, std::ostream& out, PanelFormat format);

enum class PositivityPolicy { reject, floor };

struct FlooredCell {
  std::string country;
  std::string indicator;
  int year;
  double original;
};

/// Enforce strict positivity. Under reject, any value <= 0 throws with the
/// offending (country, indicator, year); under floor, it is replaced by
/// eps_pos and recorded in `log` when given.
IndicatorPanel validate_positivity(const IndicatorPanel& panel,
                                   PositivityPolicy policy,
                                   double eps_pos = 1e-6,
                                   std::vector<FlooredCell>* log = nullptr);

/// Restrict the panel to [start, end]; both bounds must lie in range.
IndicatorPanel select_window(const IndicatorPanel& panel, int start, int end);

/// Read the bundled indicator dictionary (JSON array of code/description/
/// units/kind objects).
std::vector<IndicatorId> load_indicator_dictionary(std::istream& in);
std::vector<IndicatorId> load_indicator_dictionary_file(const std::string& path);

}  // namespace envmarket
