#include "envmarket/options.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "envmarket/numerics.hpp"
#include "envmarket/rng.hpp"

namespace envmarket {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void validate_job(const PricingJob& job) {
  if (job.model.innovation != InnovationKind::nig)
    throw std::domain_error("pricing: model must use NIG innovations");
  if (!(job.s0 > 0.0)) throw std::domain_error("pricing: S0 must be positive");
  if (job.paths < 1) throw std::domain_error("pricing: path count must be >= 1");
  if (job.maturities.empty()) throw std::domain_error("pricing: no maturities");
  if (job.strikes.empty()) throw std::domain_error("pricing: no strikes");
  for (int t : job.maturities)
    if (t < 1) throw std::domain_error("pricing: maturities must be >= 1");
  for (double k : job.strikes)
    if (!(k > 0.0)) throw std::domain_error("pricing: strikes must be positive");
  int t_max = *std::max_element(job.maturities.begin(), job.maturities.end());
  if (job.rf.empty())
    throw std::domain_error("pricing: rate curve is empty");
  if (job.rf.size() != 1 && int(job.rf.size()) < t_max)
    throw std::domain_error("pricing: rate curve shorter than longest maturity");
}

// Conditional law of R_t given a_t: the standardized innovation scaled by
// sqrt(a_t) and shifted by r' + m_t, with m_t = lambda0 sqrt(a_t) - a_t / 2.
NigParams conditional_law(const NigParams& eps, double a_t, double rf_step,
                          double lambda0) {
  double sa = std::sqrt(a_t);
  NigParams cond;
  cond.alpha = eps.alpha / sa;
  cond.beta = eps.beta / sa;
  cond.delta = eps.delta * sa;
  cond.mu = rf_step + lambda0 * sa - a_t / 2.0 + eps.mu * sa;
  return cond;
}

double draw_nig(const NigParams& p, Rng& rng, bool negate) {
  double z = rng.next_inverse_gaussian(p.subordinator_mean(), p.subordinator_shape());
  double n = rng.next_normal();
  if (negate) n = -n;
  return p.mu + p.beta * z + std::sqrt(z) * n;
}

double next_variance(const VolSpec& vol, double a, double eps, double abs_mean) {
  double z = std::sqrt(a) * eps;
  switch (vol.family) {
    case VolFamily::arch1:
      return vol.alpha0 + vol.alpha1 * z * z;
    case VolFamily::garch11:
      return vol.alpha0 + vol.alpha1 * z * z + vol.beta1 * a;
    case VolFamily::egarch11:
      return std::exp(vol.omega + vol.beta_e * std::log(a) +
                      vol.alpha_e * (std::fabs(eps) - abs_mean) +
                      vol.gamma_asym * eps);
  }
  return a;
}

}  // namespace

double PricingJob::rate_at(int step) const {
  if (rf.size() == 1) return rf[0];
  return rf[size_t(step - 1)];
}

double PricingJob::cum_rate(int steps) const {
  double acc = 0.0;
  for (int t = 1; t <= steps; ++t) acc += rate_at(t);
  return acc;
}

double esscher_shift(const FittedModel& model, double sigma_t, double rf_step,
                     double lambda0) {
  if (!(sigma_t > 0.0))
    throw std::domain_error("esscher_shift: conditional stdev must be positive");
  NigParams cond =
      conditional_law(model.nig, sigma_t * sigma_t, rf_step, lambda0);
  // Both theta and 1 + theta must stay inside the MGF domain |beta + u| < alpha.
  double lo = -cond.alpha - cond.beta;
  double hi = cond.alpha - cond.beta - 1.0;
  if (!(hi > lo))
    throw std::runtime_error(
        "esscher_shift: empty admissible bracket (alpha too small for this "
        "volatility level)");
  double width = hi - lo;
  lo += 1e-9 * width;
  hi -= 1e-9 * width;
  // ln MGF(1+theta) - ln MGF(theta) written without the cancelling large
  // terms: mu + delta (s(theta) - s(theta+1)) with
  // s(u) = sqrt(alpha^2 - (beta+u)^2), and the difference of square roots
  // rationalized for stability at large alpha.
  auto s = [&](double u) {
    double t = cond.beta + u;
    return std::sqrt(std::max((cond.alpha - t) * (cond.alpha + t), 0.0));
  };
  auto g = [&](double theta) {
    double numer = 2.0 * (cond.beta + theta) + 1.0;
    return cond.mu + cond.delta * numer / (s(theta) + s(theta + 1.0)) - rf_step;
  };
  double glo = g(lo), ghi = g(hi);
  if (glo > 0.0 || ghi < 0.0)
    throw std::runtime_error("esscher_shift: no sign change on the admissible bracket");
  return num::brent_root(g, lo, hi, 1e-15, 1e-10);
}

Eigen::MatrixXd simulate_risk_neutral(const PricingJob& job) {
  validate_job(job);
  const Eigen::Index n_paths = job.paths;
  const int t_max = *std::max_element(job.maturities.begin(), job.maturities.end());
  std::vector<int> slot(size_t(t_max) + 1, -1);
  for (size_t i = 0; i < job.maturities.size(); ++i)
    slot[size_t(job.maturities[i])] = int(i);

  const NigParams& eps_law = job.model.nig;
  double abs_mean = innovation_abs_mean(InnovationKind::nig, eps_law);
  double a1 = job.model.one_step_variance();
  double log_s0 = std::log(job.s0);

  Eigen::MatrixXd levels(n_paths, Eigen::Index(job.maturities.size()));
  for (Eigen::Index p = 0; p < n_paths; ++p) {
    bool negate = job.antithetic && (p % 2 == 1);
    Rng rng(job.seed, std::uint64_t(job.antithetic ? p / 2 : p));
    double a = a1;
    double log_s = log_s0;
    for (int t = 1; t <= t_max; ++t) {
      double r = job.rate_at(t);
      double sa = std::sqrt(a);
      double theta = esscher_shift(job.model, sa, r, job.lambda0);
      NigParams shifted = eps_law;
      shifted.beta = eps_law.beta + sa * theta;
      double eps = draw_nig(shifted, rng, negate);
      log_s += r + job.lambda0 * sa - a / 2.0 + sa * eps;
      if (slot[size_t(t)] >= 0) levels(p, slot[size_t(t)]) = std::exp(log_s);
      a = next_variance(job.model.vol, a, eps, abs_mean);
    }
  }
  return levels;
}

OptionSurface price_options(const Eigen::MatrixXd& levels, const PricingJob& job) {
  const Eigen::Index n_paths = levels.rows();
  const Eigen::Index n_t = Eigen::Index(job.maturities.size());
  const Eigen::Index n_k = Eigen::Index(job.strikes.size());
  if (levels.cols() != n_t)
    throw std::domain_error("price_options: level matrix shape mismatch");
  OptionSurface s;
  s.maturities = job.maturities;
  s.strikes = job.strikes;
  s.call.resize(n_t, n_k);
  s.put.resize(n_t, n_k);
  s.call_se.resize(n_t, n_k);
  s.put_se.resize(n_t, n_k);
  s.moneyness.resize(n_t, n_k);
  s.implied_vol = Eigen::MatrixXd::Constant(n_t, n_k, kNan);
  for (Eigen::Index i = 0; i < n_t; ++i) {
    double disc = std::exp(-job.cum_rate(job.maturities[size_t(i)]));
    for (Eigen::Index j = 0; j < n_k; ++j) {
      double k = job.strikes[size_t(j)];
      double cm = 0.0, pm = 0.0, c2 = 0.0, p2 = 0.0;
      for (Eigen::Index p = 0; p < n_paths; ++p) {
        double c = std::max(levels(p, i) - k, 0.0);
        double q = std::max(k - levels(p, i), 0.0);
        cm += c;
        pm += q;
        c2 += c * c;
        p2 += q * q;
      }
      double n = double(n_paths);
      cm /= n;
      pm /= n;
      double cvar = std::max(0.0, c2 / n - cm * cm);
      double pvar = std::max(0.0, p2 / n - pm * pm);
      s.call(i, j) = disc * cm;
      s.put(i, j) = disc * pm;
      s.call_se(i, j) = disc * std::sqrt(cvar / n);
      s.put_se(i, j) = disc * std::sqrt(pvar / n);
      s.moneyness(i, j) = job.s0 / k;
    }
  }
  return s;
}

double black_scholes(OptionSide side, double s0, double k, double sigma,
                     double tau, double rate) {
  if (!(s0 > 0.0 && k > 0.0 && tau > 0.0))
    throw std::domain_error("black_scholes: bad inputs");
  double disc = std::exp(-rate * tau);
  if (sigma <= 0.0) {
    double fwd = s0 - k * disc;
    return side == OptionSide::call ? std::max(fwd, 0.0) : std::max(-fwd, 0.0);
  }
  double sv = sigma * std::sqrt(tau);
  double d1 = (std::log(s0 / k) + rate * tau) / sv + 0.5 * sv;
  double d2 = d1 - sv;
  if (side == OptionSide::call)
    return s0 * num::norm_cdf(d1) - k * disc * num::norm_cdf(d2);
  return k * disc * num::norm_cdf(-d2) - s0 * num::norm_cdf(-d1);
}

ImpliedVolResult implied_vol(double price, double s0, double k, int steps,
                             double rf_step, OptionSide side) {
  ImpliedVolResult out;
  if (steps < 1 || !(s0 > 0.0 && k > 0.0) || !std::isfinite(price)) return out;
  double tau = double(steps);
  const double lo = 1e-6, hi = 5.0;
  double p_lo = black_scholes(side, s0, k, lo, tau, rf_step);
  double p_hi = black_scholes(side, s0, k, hi, tau, rf_step);
  if (price < p_lo - 1e-8) return out;  // below the no-arbitrage band
  if (price >= p_hi) {
    out.sigma = hi;
    out.defined = true;
    out.at_upper = true;
    return out;
  }
  double a = lo, b = hi;
  double sigma = 0.5 * (a + b);
  for (int iter = 0; iter < 200; ++iter) {
    sigma = 0.5 * (a + b);
    double diff = black_scholes(side, s0, k, sigma, tau, rf_step) - price;
    if (std::fabs(diff) < 1e-8) break;
    if (diff > 0.0)
      b = sigma;
    else
      a = sigma;
  }
  out.sigma = sigma;
  out.defined = true;
  return out;
}

OptionSurface price_surface(const PricingJob& job) {
  Eigen::MatrixXd levels = simulate_risk_neutral(job);
  OptionSurface s = price_options(levels, job);
  for (Eigen::Index i = 0; i < s.call.rows(); ++i) {
    int t = job.maturities[size_t(i)];
    double rf_eff = job.cum_rate(t) / double(t);
    for (Eigen::Index j = 0; j < s.call.cols(); ++j) {
      ImpliedVolResult iv = implied_vol(s.call(i, j), job.s0,
                                        job.strikes[size_t(j)], t, rf_eff,
                                        OptionSide::call);
      if (iv.defined) s.implied_vol(i, j) = iv.sigma;
    }
  }
  return s;
}

}  // namespace envmarket
