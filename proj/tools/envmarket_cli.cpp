// Command-line front end: builds the indices, fits models, simulates,
// prices and reports, each stage writing deterministic CSV/JSON artifacts
// stamped with the resolved-config hash.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "envmarket/analytics.hpp"
#include "envmarket/factor.hpp"
#include "envmarket/garch.hpp"
#include "envmarket/index.hpp"
#include "envmarket/options.hpp"
#include "envmarket/panel.hpp"
#include "envmarket/portfolio.hpp"
#include "envmarket/simulate.hpp"
#include "envmarket/transform.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace envmarket;

namespace {

struct RunConfig {
  std::string panel = "data/fixture_panel.csv";
  std::string dictionary = "data/indicators.json";
  std::string format = "long";
  std::vector<std::string> countries;  // empty = all
  int year_start = 0;                  // 0 = full range
  int year_end = 0;
  std::string positivity = "reject";
  double eps_pos = 1e-6;
  std::string gdp_policy = "exclude_gdp";
  double eps_min = 1e-3;
  std::string transform_scope = "per_country";
  std::string family = "select";
  std::string innovation = "normal";
  std::string criterion = "bic";
  std::string mean = "constant_ma1";
  int scenarios = 1000;
  int paths = 10000;
  std::uint64_t seed = 12345;
  double rf = 0.01;
  std::vector<double> rf_curve;  // overrides flat rf when non-empty
  double var_level = 0.05;
  double cvar_level = 0.05;
  double rachev_alpha = 0.5;
  double rachev_beta = 0.5;
  int gamma_points = 100;
  bool long_only = true;
  int factor_count = 1;
  bool varimax_rotation = false;
  std::string price_country = "GLOBAL";
  std::vector<int> maturities = {1, 2, 3, 4, 5};
  std::vector<double> moneyness = {0.8, 0.9, 1.0, 1.1, 1.2};
  std::vector<double> strikes;  // absolute; overrides moneyness when set
  double lambda0 = 0.0;
  bool antithetic = false;
  std::string out = "out";
};

json config_to_json(const RunConfig& c) {
  json j;
  j["panel"] = c.panel;
  j["dictionary"] = c.dictionary;
  j["format"] = c.format;
  j["countries"] = c.countries;
  j["year_start"] = c.year_start;
  j["year_end"] = c.year_end;
  j["positivity"] = c.positivity;
  j["eps_pos"] = c.eps_pos;
  j["gdp_policy"] = c.gdp_policy;
  j["eps_min"] = c.eps_min;
  j["transform_scope"] = c.transform_scope;
  j["family"] = c.family;
  j["innovation"] = c.innovation;
  j["criterion"] = c.criterion;
  j["mean"] = c.mean;
  j["scenarios"] = c.scenarios;
  j["paths"] = c.paths;
  j["seed"] = c.seed;
  j["rf"] = c.rf;
  j["rf_curve"] = c.rf_curve;
  j["var_level"] = c.var_level;
  j["cvar_level"] = c.cvar_level;
  j["rachev_alpha"] = c.rachev_alpha;
  j["rachev_beta"] = c.rachev_beta;
  j["gamma_points"] = c.gamma_points;
  j["long_only"] = c.long_only;
  j["factor_count"] = c.factor_count;
  j["varimax"] = c.varimax_rotation;
  j["price_country"] = c.price_country;
  j["maturities"] = c.maturities;
  j["moneyness"] = c.moneyness;
  j["strikes"] = c.strikes;
  j["lambda0"] = c.lambda0;
  j["antithetic"] = c.antithetic;
  j["out"] = c.out;
  return j;
}

template <typename T>
void get_if(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  get_if(j, "panel", c.panel);
  get_if(j, "dictionary", c.dictionary);
  get_if(j, "format", c.format);
  get_if(j, "countries", c.countries);
  get_if(j, "year_start", c.year_start);
  get_if(j, "year_end", c.year_end);
  get_if(j, "positivity", c.positivity);
  get_if(j, "eps_pos", c.eps_pos);
  get_if(j, "gdp_policy", c.gdp_policy);
  get_if(j, "eps_min", c.eps_min);
  get_if(j, "transform_scope", c.transform_scope);
  get_if(j, "family", c.family);
  get_if(j, "innovation", c.innovation);
  get_if(j, "criterion", c.criterion);
  get_if(j, "mean", c.mean);
  get_if(j, "scenarios", c.scenarios);
  get_if(j, "paths", c.paths);
  get_if(j, "seed", c.seed);
  get_if(j, "rf", c.rf);
  get_if(j, "rf_curve", c.rf_curve);
  get_if(j, "var_level", c.var_level);
  get_if(j, "cvar_level", c.cvar_level);
  get_if(j, "rachev_alpha", c.rachev_alpha);
  get_if(j, "rachev_beta", c.rachev_beta);
  get_if(j, "gamma_points", c.gamma_points);
  get_if(j, "long_only", c.long_only);
  get_if(j, "factor_count", c.factor_count);
  get_if(j, "varimax", c.varimax_rotation);
  get_if(j, "price_country", c.price_country);
  get_if(j, "maturities", c.maturities);
  get_if(j, "moneyness", c.moneyness);
  get_if(j, "strikes", c.strikes);
  get_if(j, "lambda0", c.lambda0);
  get_if(j, "antithetic", c.antithetic);
  get_if(j, "out", c.out);
  return c;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct Workspace {
  RunConfig cfg;
  std::string hash;
  fs::path out;

  // lazily computed stage data
  bool have_index = false;
  IndicatorPanel panel;
  EiTable ei;
  std::vector<IndexSeries> deis;  // countries order
  IndexSeries gdei;

  bool have_transform = false;
  std::map<std::string, TransformParams> transform;  // per country + GLOBAL
  std::vector<ReturnSeries> returns;                 // countries order
  ReturnSeries global_returns;

  bool have_models = false;
  std::vector<FittedModel> models;                  // countries order
  std::vector<SelectionResult> selections;          // when family == select
  std::optional<FittedModel> global_model;

  bool have_scenarios = false;
  MvNigSpec mvnig;
  ScenarioMatrix scenario_matrix;
};

std::ofstream open_artifact(const Workspace& ws, const std::string& name) {
  std::ofstream out(ws.out / name, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write output file '" +
                             (ws.out / name).string() + "'");
  out << "# config_hash=" << ws.hash << "\n";
  return out;
}

GdpPolicy gdp_policy_of(const RunConfig& c) {
  if (c.gdp_policy == "include_all") return GdpPolicy::include_all_divide_by_K;
  if (c.gdp_policy == "exclude_gdp")
    return GdpPolicy::exclude_gdp_divide_by_K_minus_1;
  throw std::domain_error("config: unknown gdp_policy '" + c.gdp_policy + "'");
}

VolFamily family_of(const std::string& s) {
  if (s == "arch1") return VolFamily::arch1;
  if (s == "garch11") return VolFamily::garch11;
  if (s == "egarch11") return VolFamily::egarch11;
  throw std::domain_error("config: unknown family '" + s + "'");
}

InnovationKind innovation_of(const std::string& s) {
  if (s == "normal") return InnovationKind::normal;
  if (s == "nig") return InnovationKind::nig;
  throw std::domain_error("config: unknown innovation '" + s + "'");
}

MeanKind mean_of(const std::string& s) {
  if (s == "constant_ma1") return MeanKind::constant_ma1;
  if (s == "ar1") return MeanKind::ar1;
  throw std::domain_error("config: unknown mean '" + s + "'");
}

IndicatorPanel filter_countries(const IndicatorPanel& panel,
                                const std::vector<std::string>& keep) {
  if (keep.empty()) return panel;
  IndicatorPanel out;
  out.indicators = panel.indicators;
  out.year_start = panel.year_start;
  std::vector<Eigen::Index> cols;
  for (const std::string& c : keep) cols.push_back(panel.country_index(c));
  out.countries = keep;
  for (const Eigen::MatrixXd& slab : panel.values) {
    Eigen::MatrixXd m(slab.rows(), Eigen::Index(cols.size()));
    for (size_t i = 0; i < cols.size(); ++i) m.col(Eigen::Index(i)) = slab.col(cols[i]);
    out.values.push_back(m);
  }
  return out;
}

void compute_index(Workspace& ws) {
  if (ws.have_index) return;
  const RunConfig& c = ws.cfg;
  std::ifstream in(c.panel);
  if (!in) {
    std::cerr << "missing input file: " << c.panel << "\n";
    std::exit(2);
  }
  std::vector<IndicatorId> dict;
  {
    std::ifstream din(c.dictionary);
    if (!din) {
      std::cerr << "missing input file: " << c.dictionary << "\n";
      std::exit(2);
    }
    dict = load_indicator_dictionary(din);
  }
  PanelFormat fmt = c.format == "wide" ? PanelFormat::wide_csv : PanelFormat::long_csv;
  IndicatorPanel panel = load_panel(in, fmt, dict);
  panel = filter_countries(panel, c.countries);
  if (c.year_start > 0 || c.year_end > 0) {
    int ys = c.year_start > 0 ? c.year_start : panel.year_start;
    int ye = c.year_end > 0 ? c.year_end : panel.year_end();
    panel = select_window(panel, ys, ye);
  }
  PositivityPolicy pol =
      c.positivity == "floor" ? PositivityPolicy::floor : PositivityPolicy::reject;
  ws.panel = validate_positivity(panel, pol, c.eps_pos);
  ws.ei = environmental_index_table(ws.panel, gdp_policy_of(c));
  ws.deis = dollarize(ws.ei, ws.panel);
  ws.gdei = global_index(ws.deis);
  ws.have_index = true;
}

void compute_transform(Workspace& ws) {
  if (ws.have_transform) return;
  compute_index(ws);
  const RunConfig& c = ws.cfg;
  std::vector<IndexSeries> all = ws.deis;
  all.push_back(ws.gdei);
  TransformParams pooled;
  if (c.transform_scope == "pooled") {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const IndexSeries& s : ws.deis) {
      lo = std::min(lo, s.values.minCoeff());
      hi = std::max(hi, s.values.maxCoeff());
    }
    pooled = fit_exponential_map(lo, hi, c.eps_min);
  }
  for (const IndexSeries& s : all) {
    TransformParams p = c.transform_scope == "pooled" && s.country != kGlobalCode
                            ? pooled
                            : fit_exponential_map(s.values, c.eps_min);
    ws.transform[s.country] = p;
    ReturnSeries r = log_returns(s, p);
    if (s.country == kGlobalCode)
      ws.global_returns = r;
    else
      ws.returns.push_back(r);
  }
  ws.have_transform = true;
}

FittedModel fit_one(const Workspace& ws, const Eigen::VectorXd& r,
                    std::vector<SelectionResult>* selections) {
  const RunConfig& c = ws.cfg;
  InnovationKind innov = innovation_of(c.innovation);
  if (c.family == "select") {
    SelectionCriterion crit =
        c.criterion == "aic" ? SelectionCriterion::aic : SelectionCriterion::bic;
    SelectionResult sel = select_model(r, crit, innov);
    if (selections) selections->push_back(sel);
    return sel.model;
  }
  FittedModel m = fit_model(r, family_of(c.family), innov, mean_of(c.mean));
  if (selections) {
    SelectionResult sel;
    sel.family = m.vol.family;
    sel.model = m;
    sel.candidates.emplace_back(m.vol.family, m);
    selections->push_back(sel);
  }
  return m;
}

void compute_models(Workspace& ws) {
  if (ws.have_models) return;
  compute_transform(ws);
  for (const ReturnSeries& r : ws.returns)
    ws.models.push_back(fit_one(ws, r.values, &ws.selections));
  ws.global_model = fit_one(ws, ws.global_returns.values, nullptr);
  ws.have_models = true;
}

void compute_scenarios(Workspace& ws) {
  if (ws.have_scenarios) return;
  compute_models(ws);
  const Eigen::Index L = Eigen::Index(ws.models.size());
  Eigen::Index n = ws.models[0].residuals.size();
  Eigen::MatrixXd resid(n, L);
  for (Eigen::Index l = 0; l < L; ++l) resid.col(l) = ws.models[size_t(l)].residuals;
  ws.mvnig = fit_mvnig(resid);
  ws.scenario_matrix = sample_scenarios(ws.mvnig, ws.models, ws.panel.countries,
                                        ws.cfg.scenarios, ws.cfg.seed);
  ws.have_scenarios = true;
}

void stage_build_index(Workspace& ws) {
  compute_index(ws);
  std::ofstream out = open_artifact(ws, "index.csv");
  out << "country,year,ei,gdp,dei\n";
  Eigen::Index gdp_row = ws.panel.gdp_index();
  for (Eigen::Index l = 0; l < ws.panel.country_count(); ++l) {
    for (int y = 0; y < ws.panel.year_count(); ++y) {
      int year = ws.panel.year_start + y;
      out << ws.panel.countries[size_t(l)] << ',' << year << ','
          << num(ws.ei.values(y, l)) << ','
          << num(ws.panel.value(gdp_row, l, year)) << ','
          << num(ws.deis[size_t(l)].values[y]) << "\n";
    }
  }
  for (int y = 0; y < ws.panel.year_count(); ++y)
    out << kGlobalCode << ',' << ws.panel.year_start + y << ",,,"
        << num(ws.gdei.values[y]) << "\n";
}

void stage_transform(Workspace& ws) {
  compute_transform(ws);
  std::ofstream out = open_artifact(ws, "transform.csv");
  out << "country,year,f_dei,log_return\n";
  std::vector<const IndexSeries*> all;
  for (const IndexSeries& s : ws.deis) all.push_back(&s);
  all.push_back(&ws.gdei);
  for (const IndexSeries* s : all) {
    const TransformParams& p = ws.transform.at(s->country);
    for (Eigen::Index t = 0; t < s->values.size(); ++t) {
      out << s->country << ',' << s->year_start + int(t) << ','
          << num(p.apply(s->values[t])) << ',';
      if (t > 0) out << num(p.b * (s->values[t] - s->values[t - 1]));
      out << "\n";
    }
  }
  json j;
  for (const IndexSeries* s : all) {
    const TransformParams& p = ws.transform.at(s->country);
    json e;
    e["a"] = p.a;
    e["b"] = p.b;
    e["eps_min"] = p.eps_min;
    e["scope"] = ws.cfg.transform_scope;
    j[s->country] = e;
  }
  std::ofstream side = open_artifact(ws, "transform.json");
  side << j.dump(2) << "\n";
}

json model_to_json(const FittedModel& m) {
  json j;
  j["family"] = to_string(m.vol.family);
  json params;
  params["phi0"] = m.mean.phi0;
  params["theta1"] = m.mean.theta1;
  switch (m.vol.family) {
    case VolFamily::arch1:
      params["alpha0"] = m.vol.alpha0;
      params["alpha1"] = m.vol.alpha1;
      break;
    case VolFamily::garch11:
      params["alpha0"] = m.vol.alpha0;
      params["alpha1"] = m.vol.alpha1;
      params["beta1"] = m.vol.beta1;
      break;
    case VolFamily::egarch11:
      params["omega"] = m.vol.omega;
      params["alpha_e"] = m.vol.alpha_e;
      params["gamma_asym"] = m.vol.gamma_asym;
      params["beta_e"] = m.vol.beta_e;
      break;
  }
  j["params"] = params;
  j["innovation"] = m.innovation == InnovationKind::nig ? "nig" : "normal";
  if (m.innovation == InnovationKind::nig) {
    json nj;
    nj["alpha"] = m.nig.alpha;
    nj["beta"] = m.nig.beta;
    nj["delta"] = m.nig.delta;
    nj["mu"] = m.nig.mu;
    j["nig"] = nj;
  }
  j["log_likelihood"] = m.log_likelihood;
  j["aic"] = m.aic;
  j["bic"] = m.bic;
  j["n"] = m.n;
  j["warnings"] = m.warnings;
  return j;
}

void stage_fit(Workspace& ws) {
  compute_models(ws);
  std::ofstream crit = open_artifact(ws, "fit_criteria.csv");
  crit << "country,family,log_likelihood,aic,bic,selected\n";
  json models;
  for (size_t i = 0; i < ws.returns.size(); ++i) {
    const std::string& country = ws.returns[i].country;
    const SelectionResult& sel = ws.selections[i];
    for (const auto& [fam, m] : sel.candidates) {
      crit << country << ',' << to_string(fam) << ',' << num(m.log_likelihood)
           << ',' << num(m.aic) << ',' << num(m.bic) << ','
           << (fam == sel.family ? 1 : 0) << "\n";
    }
    json entry = model_to_json(sel.model);
    entry["warnings"] = sel.warnings;
    models[country] = entry;
  }
  if (ws.global_model) models[kGlobalCode] = model_to_json(*ws.global_model);
  std::ofstream out = open_artifact(ws, "models.json");
  out << models.dump(2) << "\n";
}

void stage_simulate(Workspace& ws) {
  compute_scenarios(ws);
  std::ofstream out = open_artifact(ws, "scenarios.csv");
  out << "scenario,country,return\n";
  const ScenarioMatrix& sm = ws.scenario_matrix;
  for (Eigen::Index s = 0; s < sm.returns.rows(); ++s)
    for (Eigen::Index l = 0; l < sm.returns.cols(); ++l)
      out << s << ',' << sm.countries[size_t(l)] << ',' << num(sm.returns(s, l))
          << "\n";
  json j;
  j["seed"] = sm.seed;
  j["scenarios"] = sm.returns.rows();
  j["shared_shape"] = ws.mvnig.shared_shape;
  j["psd_projected"] = ws.mvnig.psd_projected;
  json per;
  for (Eigen::Index l = 0; l < sm.returns.cols(); ++l) {
    json e;
    e["mean"] = sm.returns.col(l).mean();
    Eigen::ArrayXd col = sm.returns.col(l).array();
    e["variance"] = (col - col.mean()).square().sum() / double(col.size() - 1);
    per[sm.countries[size_t(l)]] = e;
  }
  j["columns"] = per;
  json corr = json::array();
  for (Eigen::Index i = 0; i < ws.mvnig.mixing_correlation.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < ws.mvnig.mixing_correlation.cols(); ++k)
      row.push_back(ws.mvnig.mixing_correlation(i, k));
    corr.push_back(row);
  }
  j["mixing_correlation"] = corr;
  std::ofstream side = open_artifact(ws, "scenarios.json");
  side << j.dump(2) << "\n";
}

std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

void stage_regress(Workspace& ws) {
  compute_transform(ws);
  std::ofstream out = open_artifact(ws, "regress.csv");
  out << "country,method,alpha,alpha_pvalue,alpha_stars,beta,beta_pvalue,"
         "beta_stars,adjusted_r2\n";
  for (const ReturnSeries& r : ws.returns) {
    Eigen::VectorXd y = r.values.array() - ws.cfg.rf;
    Eigen::VectorXd x = ws.global_returns.values.array() - ws.cfg.rf;
    RegressionResult o = ols(y, x);
    RegressionResult rb = robust_regress(y, x);
    for (const RegressionResult* res : {&o, &rb}) {
      out << r.country << ','
          << (res->method == RegressionMethod::ols ? "ols" : "robust") << ','
          << num(res->alpha) << ',' << num(res->alpha_pvalue) << ','
          << stars(res->alpha_pvalue) << ',' << num(res->beta) << ','
          << num(res->beta_pvalue) << ',' << stars(res->beta_pvalue) << ','
          << num(res->adjusted_r2) << "\n";
    }
  }
}

void stage_metrics(Workspace& ws) {
  compute_transform(ws);
  std::ofstream out = open_artifact(ws, "metrics.csv");
  out << "country,sharpe,sortino,rachev,jensen_alpha,var,cvar\n";
  for (const ReturnSeries& r : ws.returns) {
    out << r.country << ',';
    out << num(sharpe(r.values, ws.cfg.rf)) << ',';
    try {
      out << num(sortino(r.values, ws.cfg.rf));
    } catch (const std::domain_error&) {
      // undefined: no observation below target
    }
    out << ',';
    try {
      out << num(rachev(r.values, ws.cfg.rf, ws.cfg.rachev_alpha,
                        ws.cfg.rachev_beta));
    } catch (const std::domain_error&) {
    }
    out << ',';
    CapmResult capm = jensen_alpha(r.values, ws.global_returns.values, ws.cfg.rf);
    VarCvar vc = var_cvar(r.values, ws.cfg.var_level);
    out << num(capm.alpha) << ',' << num(vc.var) << ',' << num(vc.cvar) << "\n";
  }
}

void write_frontier(const Workspace& ws, const std::string& name,
                    const std::vector<FrontierPoint>& pts) {
  std::ofstream out(ws.out / name, std::ios::binary);
  out << "# config_hash=" << ws.hash << "\n";
  out << "gamma,expected_return,risk";
  for (Eigen::Index l = 0; l < pts.front().weights.size(); ++l)
    out << ",w_" << l + 1;
  out << "\n";
  for (const FrontierPoint& p : pts) {
    out << num(p.gamma) << ',' << num(p.expected_return) << ',' << num(p.risk);
    for (Eigen::Index l = 0; l < p.weights.size(); ++l)
      out << ',' << num(p.weights[l]);
    out << "\n";
  }
}

void stage_frontier(Workspace& ws) {
  compute_scenarios(ws);
  std::vector<double> gammas;
  for (int i = 0; i < ws.cfg.gamma_points; ++i)
    gammas.push_back(double(i) / double(ws.cfg.gamma_points));
  const Eigen::MatrixXd& R = ws.scenario_matrix.returns;
  write_frontier(ws, "frontier_variance.csv",
                 mean_variance_frontier(R, gammas, ws.cfg.long_only));
  write_frontier(ws, "frontier_cvar.csv",
                 mean_cvar_frontier(R, ws.cfg.cvar_level, gammas, ws.cfg.long_only));
}

void stage_price_options(Workspace& ws) {
  compute_transform(ws);
  const std::string& country = ws.cfg.price_country;
  const IndexSeries* series = nullptr;
  if (country == kGlobalCode) {
    series = &ws.gdei;
  } else {
    for (const IndexSeries& s : ws.deis)
      if (s.country == country) series = &s;
    if (!series)
      throw std::domain_error("price-options: unknown country '" + country + "'");
  }
  const ReturnSeries* rets = &ws.global_returns;
  for (const ReturnSeries& r : ws.returns)
    if (r.country == country) rets = &r;

  PricingJob job;
  job.model = fit_model(rets->values, VolFamily::garch11, InnovationKind::nig,
                        mean_of(ws.cfg.mean));
  job.s0 = ws.transform.at(country).apply(series->values[series->values.size() - 1]);
  job.rf = ws.cfg.rf_curve.empty() ? std::vector<double>{ws.cfg.rf} : ws.cfg.rf_curve;
  job.maturities = ws.cfg.maturities;
  if (!ws.cfg.strikes.empty()) {
    job.strikes = ws.cfg.strikes;
  } else {
    for (double m : ws.cfg.moneyness) job.strikes.push_back(m * job.s0);
  }
  job.paths = ws.cfg.paths;
  job.seed = ws.cfg.seed;
  job.lambda0 = ws.cfg.lambda0;
  job.antithetic = ws.cfg.antithetic;

  OptionSurface surf = price_surface(job);
  std::ofstream out = open_artifact(ws, "options.csv");
  out << "T,K,moneyness,call,put,call_se,put_se,implied_vol\n";
  for (size_t i = 0; i < surf.maturities.size(); ++i) {
    for (size_t j = 0; j < surf.strikes.size(); ++j) {
      Eigen::Index ii = Eigen::Index(i), jj = Eigen::Index(j);
      out << surf.maturities[i] << ',' << num(surf.strikes[j]) << ','
          << num(surf.moneyness(ii, jj)) << ',' << num(surf.call(ii, jj)) << ','
          << num(surf.put(ii, jj)) << ',' << num(surf.call_se(ii, jj)) << ','
          << num(surf.put_se(ii, jj)) << ',';
      if (std::isfinite(surf.implied_vol(ii, jj)))
        out << num(surf.implied_vol(ii, jj));
      out << "\n";
    }
  }
}

void stage_factors(Workspace& ws) {
  compute_transform(ws);
  const Eigen::Index L = Eigen::Index(ws.returns.size());
  const Eigen::Index n = ws.returns[0].values.size();
  Eigen::MatrixXd R(n, L);
  for (Eigen::Index l = 0; l < L; ++l) R.col(l) = ws.returns[size_t(l)].values;
  FactorModel model =
      ml_factor_fit(R, ws.cfg.factor_count, ws.panel.countries);
  Eigen::MatrixXd loadings =
      ws.cfg.varimax_rotation ? varimax(model.loadings) : model.loadings;

  std::ofstream out = open_artifact(ws, "factors.csv");
  out << "country";
  for (int j = 0; j < model.m; ++j) out << ",beta" << j + 1;
  out << ",sigma2\n";
  for (Eigen::Index l = 0; l < L; ++l) {
    out << model.countries[size_t(l)];
    for (int j = 0; j < model.m; ++j) out << ',' << num(loadings(l, j));
    out << ',' << num(model.uniquenesses[l]) << "\n";
  }
  std::ofstream lout = open_artifact(ws, "loadings.csv");
  lout << "country";
  for (int j = 0; j < model.m; ++j) lout << ",beta" << j + 1;
  lout << "\n";
  for (Eigen::Index l = 0; l < L; ++l) {
    lout << model.countries[size_t(l)];
    for (int j = 0; j < model.m; ++j) lout << ',' << num(loadings(l, j));
    lout << "\n";
  }
  json j;
  j["m"] = model.m;
  j["log_likelihood"] = model.log_likelihood;
  j["lr_statistic"] = model.lr_statistic;
  j["lr_df"] = model.lr_df;
  j["lr_pvalue"] = model.lr_pvalue;
  j["converged"] = model.converged;
  j["heywood"] = model.heywood;
  j["ordered_by_uniqueness"] = order_by_uniqueness(model);
  std::ofstream side = open_artifact(ws, "factors.json");
  side << j.dump(2) << "\n";
}

void run_stage(Workspace& ws, const std::string& name) {
  try {
    if (name == "build-index") stage_build_index(ws);
    else if (name == "transform") stage_transform(ws);
    else if (name == "fit") stage_fit(ws);
    else if (name == "simulate") stage_simulate(ws);
    else if (name == "regress") stage_regress(ws);
    else if (name == "metrics") stage_metrics(ws);
    else if (name == "frontier") stage_frontier(ws);
    else if (name == "price-options") stage_price_options(ws);
    else if (name == "factors") stage_factors(ws);
    else throw std::domain_error("unknown subcommand '" + name + "'");
  } catch (const std::exception& e) {
    std::cerr << "stage " << name << ": " << e.what() << "\n";
    std::exit(1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dollar environmental index toolkit"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, out_dir, panel, dictionary, format, family,
      innovation, criterion, mean_kind, transform_scope, positivity, gdp_policy,
      price_country;
  std::uint64_t seed = 0;
  int scenarios = 0, paths = 0, gamma_points = 0, factor_count = 0,
      year_start = 0, year_end = 0;
  double rf = 0.0, eps_min = 0.0, var_level = 0.0, cvar_level = 0.0,
         lambda0 = 0.0;
  bool antithetic = false, no_long_only = false;
  std::vector<std::string> countries;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--panel", panel, "panel CSV path");
  app.add_option("--dictionary", dictionary, "indicator dictionary path");
  app.add_option("--format", format, "panel format: long|wide");
  app.add_option("--country", countries, "country subset (repeatable)");
  app.add_option("--year-start", year_start, "window start year");
  app.add_option("--year-end", year_end, "window end year");
  app.add_option("--positivity", positivity, "positivity policy: reject|floor");
  app.add_option("--gdp-policy", gdp_policy, "exclude_gdp|include_all");
  app.add_option("--eps-min", eps_min, "transform epsilon at the minimum");
  app.add_option("--transform-scope", transform_scope, "per_country|pooled");
  app.add_option("--family", family, "arch1|garch11|egarch11|select");
  app.add_option("--innovation", innovation, "normal|nig");
  app.add_option("--criterion", criterion, "aic|bic");
  app.add_option("--mean", mean_kind, "constant_ma1|ar1");
  app.add_option("--scenarios", scenarios, "scenario count S");
  app.add_option("--paths", paths, "Monte Carlo path count N");
  app.add_option("--rf", rf, "risk-free rate per period");
  app.add_option("--var-level", var_level, "VaR/CVaR tail level");
  app.add_option("--cvar-level", cvar_level, "frontier CVaR level");
  app.add_option("--gamma-points", gamma_points, "frontier grid size");
  app.add_flag("--no-long-only", no_long_only, "allow short sales");
  app.add_option("--factors", factor_count, "factor count m");
  app.add_option("--price-country", price_country, "series to price options on");
  app.add_option("--lambda0", lambda0, "risk-premium constant");
  app.add_flag("--antithetic", antithetic, "antithetic variates");

  for (const char* name :
       {"build-index", "transform", "fit", "simulate", "regress", "metrics",
        "frontier", "price-options", "factors", "pipeline"})
    app.add_subcommand(name);

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  if (app.count("--config")) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "missing input file: " << config_path << "\n";
      return 2;
    }
    json j;
    try {
      in >> j;
      cfg = config_from_json(j);
    } catch (const std::exception& e) {
      std::cerr << "config: " << e.what() << "\n";
      return 1;
    }
  }
  if (app.count("--out")) cfg.out = out_dir;
  if (app.count("--seed")) cfg.seed = seed;
  if (app.count("--panel")) cfg.panel = panel;
  if (app.count("--dictionary")) cfg.dictionary = dictionary;
  if (app.count("--format")) cfg.format = format;
  if (app.count("--country")) cfg.countries = countries;
  if (app.count("--year-start")) cfg.year_start = year_start;
  if (app.count("--year-end")) cfg.year_end = year_end;
  if (app.count("--positivity")) cfg.positivity = positivity;
  if (app.count("--gdp-policy")) cfg.gdp_policy = gdp_policy;
  if (app.count("--eps-min")) cfg.eps_min = eps_min;
  if (app.count("--transform-scope")) cfg.transform_scope = transform_scope;
  if (app.count("--family")) cfg.family = family;
  if (app.count("--innovation")) cfg.innovation = innovation;
  if (app.count("--criterion")) cfg.criterion = criterion;
  if (app.count("--mean")) cfg.mean = mean_kind;
  if (app.count("--scenarios")) cfg.scenarios = scenarios;
  if (app.count("--paths")) cfg.paths = paths;
  if (app.count("--rf")) cfg.rf = rf;
  if (app.count("--var-level")) cfg.var_level = var_level;
  if (app.count("--cvar-level")) cfg.cvar_level = cvar_level;
  if (app.count("--gamma-points")) cfg.gamma_points = gamma_points;
  if (app.count("--no-long-only")) cfg.long_only = false;
  if (app.count("--factors")) cfg.factor_count = factor_count;
  if (app.count("--price-country")) cfg.price_country = price_country;
  if (app.count("--lambda0")) cfg.lambda0 = lambda0;
  if (app.count("--antithetic")) cfg.antithetic = antithetic;

  Workspace ws;
  ws.cfg = cfg;
  json resolved = config_to_json(cfg);
  // hash the semantic configuration only: where artifacts land must not
  // change what they contain
  json hashed = resolved;
  hashed.erase("out");
  ws.hash = fnv1a_hex(hashed.dump(2));
  ws.out = cfg.out;
  std::error_code ec;
  fs::create_directories(ws.out, ec);
  {
    std::ofstream cj(ws.out / "config.json", std::ios::binary);
    resolved["config_hash"] = ws.hash;
    cj << resolved.dump(2) << "\n";
  }

  std::string sub = app.get_subcommands().front()->get_name();
  if (sub == "pipeline") {
    for (const char* s : {"build-index", "transform", "fit", "simulate",
                          "regress", "metrics", "frontier", "price-options",
                          "factors"})
      run_stage(ws, s);
  } else {
    run_stage(ws, sub);
  }
  return 0;
}
