#include "envmarket/garch.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "envmarket/numerics.hpp"

namespace envmarket {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
constexpr double kBad = 1e10;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int vol_param_count(VolFamily f) {
  switch (f) {
    case VolFamily::arch1: return 2;
    case VolFamily::garch11: return 3;
    case VolFamily::egarch11: return 4;
  }
  return 0;
}

struct Packed {
  MeanSpec mean;
  VolSpec vol;
  NigParams nig;
  bool ok = true;
};

int unconstrained_size(VolFamily f, InnovationKind innov) {
  return 2 + (f == VolFamily::arch1 ? 2 : f == VolFamily::garch11 ? 3 : 4) +
         (innov == InnovationKind::nig ? 2 : 0);
}

Packed unpack(const Eigen::VectorXd& x, VolFamily family, InnovationKind innov,
              MeanKind mean_kind) {
  Packed p;
  p.mean.kind = mean_kind;
  p.mean.phi0 = x[0];
  p.mean.theta1 = std::tanh(x[1]);
  p.vol.family = family;
  int i = 2;
  if (family == VolFamily::arch1) {
    p.vol.alpha0 = std::exp(std::min(x[i], 50.0));
    p.vol.alpha1 = std::exp(std::min(x[i + 1], 10.0));
    i += 2;
  } else if (family == VolFamily::garch11) {
    p.vol.alpha0 = std::exp(std::min(x[i], 50.0));
    double persist = sigmoid(x[i + 1]);
    double ratio = sigmoid(x[i + 2]);
    p.vol.alpha1 = persist * ratio;
    p.vol.beta1 = persist * (1.0 - ratio);
    i += 3;
  } else {
    p.vol.omega = x[i];
    p.vol.alpha_e = x[i + 1];
    p.vol.gamma_asym = x[i + 2];
    p.vol.beta_e = std::tanh(x[i + 3]);
    i += 4;
  }
  if (innov == InnovationKind::nig) {
    // Standardized residual law: alpha in [1, 50] spans heavy tails through
    // near-Gaussian; the skew bound keeps the MGF domain (and with it the
    // Esscher shift used in pricing) comfortably wide.
    double a = std::exp(std::min(std::max(x[i], 0.0), 3.912023005428146));
    double b = a * 0.8 * std::tanh(x[i + 1]);
    p.nig = standardized_nig(a, b);
  }
  return p;
}

Eigen::VectorXd pack(const MeanSpec& mean, const VolSpec& vol,
                     const NigParams& nig, InnovationKind innov) {
  Eigen::VectorXd x(unconstrained_size(vol.family, innov));
  x[0] = mean.phi0;
  x[1] = std::atanh(std::min(std::max(mean.theta1, -0.999), 0.999));
  int i = 2;
  if (vol.family == VolFamily::arch1) {
    x[i] = std::log(vol.alpha0);
    x[i + 1] = std::log(std::max(vol.alpha1, 1e-8));
    i += 2;
  } else if (vol.family == VolFamily::garch11) {
    x[i] = std::log(vol.alpha0);
    double persist = std::min(std::max(vol.alpha1 + vol.beta1, 1e-6), 1.0 - 1e-6);
    double ratio = std::min(std::max(vol.alpha1 / persist, 1e-6), 1.0 - 1e-6);
    x[i + 1] = std::log(persist / (1.0 - persist));
    x[i + 2] = std::log(ratio / (1.0 - ratio));
    i += 3;
  } else {
    x[i] = vol.omega;
    x[i + 1] = vol.alpha_e;
    x[i + 2] = vol.gamma_asym;
    x[i + 3] = std::atanh(std::min(std::max(vol.beta_e, -0.999), 0.999));
    i += 4;
  }
  if (innov == InnovationKind::nig) {
    x[i] = std::log(std::min(std::max(nig.alpha, 1.0), 50.0));
    double r = nig.beta / (0.8 * nig.alpha);
    x[i + 1] = std::atanh(std::min(std::max(r, -0.999), 0.999));
  }
  return x;
}

bool constraints_hold(const MeanSpec& mean, const VolSpec& vol) {
  if (!(std::fabs(mean.theta1) < 1.0)) return false;
  switch (vol.family) {
    case VolFamily::arch1:
      return vol.alpha0 > 0.0 && vol.alpha1 >= 0.0;
    case VolFamily::garch11:
      return vol.alpha0 > 0.0 && vol.alpha1 >= 0.0 && vol.beta1 >= 0.0 &&
             vol.alpha1 + vol.beta1 < 1.0;
    case VolFamily::egarch11:
      return std::fabs(vol.beta_e) < 1.0;
  }
  return false;
}

double total_loglik(const MeanSpec& mean, const VolSpec& vol,
                    InnovationKind innov, const NigParams& nig,
                    const Eigen::VectorXd& returns) {
  double abs_mean = vol.family == VolFamily::egarch11
                        ? innovation_abs_mean(innov, nig)
                        : 0.0;
  FilterResult fr = filter_series(mean, vol, returns, abs_mean);
  double ll = 0.0;
  for (Eigen::Index t = 0; t < returns.size(); ++t) {
    double s2 = fr.sigma2[t];
    if (!(s2 > 0.0) || !std::isfinite(s2)) return -std::numeric_limits<double>::infinity();
    double eps = fr.z[t] / std::sqrt(s2);
    double lp = innov == InnovationKind::normal
                    ? -0.5 * (kLog2Pi + eps * eps)
                    : nig_logpdf(nig, eps);
    ll += lp - 0.5 * std::log(s2);
  }
  return ll;
}

}  // namespace

std::string to_string(VolFamily f) {
  switch (f) {
    case VolFamily::arch1: return "ARCH1";
    case VolFamily::garch11: return "GARCH11";
    case VolFamily::egarch11: return "EGARCH11";
  }
  return "?";
}

int VolSpec::param_count() const { return vol_param_count(family); }

double VolSpec::unconditional_variance(double fallback) const {
  switch (family) {
    case VolFamily::arch1:
      return alpha1 < 0.999 ? alpha0 / (1.0 - alpha1) : fallback;
    case VolFamily::garch11: {
      double persist = alpha1 + beta1;
      return persist < 0.999 ? alpha0 / (1.0 - persist) : fallback;
    }
    case VolFamily::egarch11:
      return std::exp(omega / (1.0 - beta_e));
  }
  return fallback;
}

double innovation_abs_mean(InnovationKind kind, const NigParams& nig) {
  if (kind == InnovationKind::normal) return std::sqrt(2.0 / 3.141592653589793);
  // E|X| for the standardized NIG by composite Simpson on [0, 30]; the
  // integrand x*(f(x) + f(-x)) is smooth and the tails are immaterial at
  // unit variance.
  const int steps = 1000;  // even
  const double hi = 30.0, h = hi / steps;
  auto g = [&](double x) { return x * (nig_pdf(nig, x) + nig_pdf(nig, -x)); };
  double sum = g(0.0) + g(hi);
  for (int i = 1; i < steps; ++i) sum += g(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

FilterResult filter_series(const MeanSpec& mean, const VolSpec& vol,
                           const Eigen::VectorXd& returns, double abs_mean_eps) {
  const Eigen::Index n = returns.size();
  FilterResult fr;
  fr.z.resize(n);
  fr.sigma2.resize(n);
  double sample_var =
      (returns.array() - returns.mean()).square().sum() / std::max<double>(1, n - 1);
  double s2 = vol.unconditional_variance(sample_var);
  if (!(s2 > 0.0) || !std::isfinite(s2)) s2 = std::max(sample_var, 1e-12);
  double z_prev = 0.0, eps_prev = 0.0, s2_prev = s2;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (t > 0) {
      switch (vol.family) {
        case VolFamily::arch1:
          s2 = vol.alpha0 + vol.alpha1 * z_prev * z_prev;
          break;
        case VolFamily::garch11:
          s2 = vol.alpha0 + vol.alpha1 * z_prev * z_prev + vol.beta1 * s2_prev;
          break;
        case VolFamily::egarch11:
          s2 = std::exp(vol.omega + vol.beta_e * std::log(s2_prev) +
                        vol.alpha_e * (std::fabs(eps_prev) - abs_mean_eps) +
                        vol.gamma_asym * eps_prev);
          break;
      }
    }
    s2 = std::max(s2, 1e-300);
    double z;
    if (mean.kind == MeanKind::constant_ma1)
      z = returns[t] - mean.phi0 - mean.theta1 * z_prev;
    else
      z = t == 0 ? returns[t] - mean.phi0
                 : returns[t] - mean.phi0 - mean.theta1 * returns[t - 1];
    fr.z[t] = z;
    fr.sigma2[t] = s2;
    eps_prev = z / std::sqrt(s2);
    z_prev = z;
    s2_prev = s2;
  }
  return fr;
}

double model_loglik(const MeanSpec& mean, const VolSpec& vol,
                    InnovationKind innovation, const NigParams& nig,
                    const Eigen::VectorXd& returns) {
  return total_loglik(mean, vol, innovation, nig, returns);
}

std::pair<double, double> information_criteria(double log_likelihood, int k, int n) {
  if (n < 1) throw std::domain_error("information_criteria: n must be >= 1");
  double aic = 2.0 * k - 2.0 * log_likelihood;
  double bic = k * std::log(double(n)) - 2.0 * log_likelihood;
  return {aic, bic};
}

double FittedModel::one_step_variance() const {
  switch (vol.family) {
    case VolFamily::arch1:
      return vol.alpha0 + vol.alpha1 * last_z * last_z;
    case VolFamily::garch11:
      return vol.alpha0 + vol.alpha1 * last_z * last_z + vol.beta1 * last_variance;
    case VolFamily::egarch11: {
      double eps = last_z / std::sqrt(last_variance);
      double abs_mean = innovation_abs_mean(innovation, nig);
      return std::exp(vol.omega + vol.beta_e * std::log(last_variance) +
                      vol.alpha_e * (std::fabs(eps) - abs_mean) +
                      vol.gamma_asym * eps);
    }
  }
  return last_variance;
}

double FittedModel::one_step_mean() const {
  if (mean.kind == MeanKind::constant_ma1) return mean.phi0 + mean.theta1 * last_z;
  return mean.phi0 + mean.theta1 * last_return;
}

FittedModel fit_model(const Eigen::VectorXd& returns, VolFamily family,
                      InnovationKind innovation, MeanKind mean_kind) {
  const Eigen::Index n = returns.size();
  if (n < 8) throw std::domain_error("fit_model: need at least 8 observations");
  if (!returns.allFinite()) throw std::domain_error("fit_model: non-finite returns");
  double mean_r = returns.mean();
  double var_r = (returns.array() - mean_r).square().sum() / double(n - 1);
  double spread = (returns.array() - mean_r).abs().maxCoeff();
  if (!(var_r > 0.0) || spread <= 1e-12 * (1.0 + std::fabs(mean_r)))
    throw std::domain_error("fit_model: zero-variance series, likelihood unbounded");

  auto objective = [&](const Eigen::VectorXd& x) {
    Packed p = unpack(x, family, innovation, mean_kind);
    if (!constraints_hold(p.mean, p.vol)) return kBad;
    double ll = total_loglik(p.mean, p.vol, innovation, p.nig, returns);
    if (!std::isfinite(ll)) return kBad;
    return -ll / double(n);
  };

  // Method-of-moments style starts with variance targeting, plus perturbations.
  struct Start { double a1, b1; };
  std::vector<Start> starts;
  if (family == VolFamily::arch1)
    starts = {{0.1, 0}, {0.3, 0}, {0.5, 0}, {0.05, 0}, {0.8, 0}, {0.02, 0}};
  else if (family == VolFamily::garch11)
    starts = {{0.05, 0.8}, {0.1, 0.85}, {0.05, 0.5}, {0.2, 0.6}, {0.02, 0.93}, {0.1, 0.2}};
  else
    starts = {{0.1, 0.8}, {0.1, 0.5}, {0.2, 0.9}, {0.05, 0.2}, {0.1, 0.95}, {0.3, 0.7}};

  num::MinimizeResult best;
  best.fval = kBad;
  for (const auto& s : starts) {
    MeanSpec m0;
    m0.kind = mean_kind;
    m0.phi0 = mean_r;
    m0.theta1 = 0.0;
    VolSpec v0;
    v0.family = family;
    NigParams nig0 = standardized_nig(2.0, 0.0);
    if (family == VolFamily::arch1) {
      v0.alpha1 = s.a1;
      v0.alpha0 = var_r * (1.0 - s.a1);
    } else if (family == VolFamily::garch11) {
      v0.alpha1 = s.a1;
      v0.beta1 = s.b1;
      v0.alpha0 = var_r * std::max(1.0 - s.a1 - s.b1, 1e-3);
    } else {
      v0.alpha_e = s.a1;
      v0.beta_e = s.b1;
      v0.omega = std::log(var_r) * (1.0 - s.b1);
      v0.gamma_asym = 0.0;
    }
    Eigen::VectorXd x0 = pack(m0, v0, nig0, innovation);
    auto r = num::bfgs(objective, x0, 400, 1e-8);
    if (r.fval < best.fval) best = r;
  }
  if (best.fval >= kBad * 0.99)
    throw std::runtime_error("fit_model: optimizer failed to converge (" +
                             to_string(family) + ")");
  best = num::newton_polish(objective, best.x, Eigen::VectorXd(), Eigen::VectorXd(),
                            40, 1e-10);

  Packed p = unpack(best.x, family, innovation, mean_kind);
  FittedModel fit;
  fit.mean = p.mean;
  fit.vol = p.vol;
  fit.innovation = innovation;
  fit.nig = p.nig;
  fit.n = int(n);
  fit.log_likelihood = -best.fval * double(n);
  int k = 2 + fit.vol.param_count() + (innovation == InnovationKind::nig ? 2 : 0);
  std::tie(fit.aic, fit.bic) = information_criteria(fit.log_likelihood, k, int(n));
  double abs_mean = family == VolFamily::egarch11
                        ? innovation_abs_mean(innovation, p.nig)
                        : 0.0;
  FilterResult fr = filter_series(p.mean, p.vol, returns, abs_mean);
  fit.variances = fr.sigma2;
  fit.residuals = (fr.z.array() / fr.sigma2.array().sqrt()).matrix();
  fit.last_variance = fr.sigma2[n - 1];
  fit.last_z = fr.z[n - 1];
  fit.last_return = returns[n - 1];
  return fit;
}

SelectionResult select_model(const Eigen::VectorXd& returns,
                             SelectionCriterion criterion,
                             InnovationKind innovation) {
  const VolFamily families[] = {VolFamily::arch1, VolFamily::garch11,
                                VolFamily::egarch11};
  SelectionResult out;
  for (VolFamily f : families) {
    try {
      out.candidates.emplace_back(f, fit_model(returns, f, innovation));
    } catch (const std::exception& e) {
      out.warnings.push_back(to_string(f) + ": " + e.what());
    }
  }
  if (out.candidates.empty())
    throw std::runtime_error("select_model: all families failed to fit");
  auto value = [&](const FittedModel& m) {
    return criterion == SelectionCriterion::aic ? m.aic : m.bic;
  };
  size_t best = 0;
  for (size_t i = 1; i < out.candidates.size(); ++i) {
    double vi = value(out.candidates[i].second);
    double vb = value(out.candidates[best].second);
    if (vi < vb) { best = i; continue; }
    if (vi == vb) {
      int ki = out.candidates[i].second.vol.param_count();
      int kb = out.candidates[best].second.vol.param_count();
      if (ki < kb) best = i;  // family order already matches fit order
    }
  }
  out.family = out.candidates[best].first;
  out.model = out.candidates[best].second;
  return out;
}

}  // namespace envmarket
