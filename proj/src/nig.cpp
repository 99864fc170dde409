#include "envmarket/nig.hpp"

#include <cmath>
#include <stdexcept>

#include "envmarket/numerics.hpp"
#include "envmarket/rng.hpp"

namespace envmarket {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

NigParams from_unconstrained(const Eigen::VectorXd& x) {
  NigParams p;
  p.alpha = std::exp(std::min(x[0], 30.0));
  p.beta =
      p.alpha * std::min(std::max(std::tanh(x[1]), -0.999999), 0.999999);
  p.delta = std::exp(std::min(x[2], 30.0));
  p.mu = x[3];
  return p;
}

Eigen::VectorXd to_unconstrained(const NigParams& p) {
  Eigen::VectorXd x(4);
  x[0] = std::log(p.alpha);
  double r = std::min(std::max(p.beta / p.alpha, -0.999999), 0.999999);
  x[1] = std::atanh(r);
  x[2] = std::log(p.delta);
  x[3] = p.mu;
  return x;
}
}  // namespace

double NigParams::gamma_bar() const {
  return std::sqrt(alpha * alpha - beta * beta);
}

bool NigParams::valid() const {
  return alpha > 0.0 && delta > 0.0 && std::fabs(beta) < alpha &&
         std::isfinite(mu);
}

double NigParams::mean() const { return mu + delta * beta / gamma_bar(); }

double NigParams::variance() const {
  double g = gamma_bar();
  return delta * alpha * alpha / (g * g * g);
}

double NigParams::skewness() const {
  return 3.0 * beta / (alpha * std::sqrt(delta * gamma_bar()));
}

double NigParams::excess_kurtosis() const {
  double r = beta / alpha;
  return 3.0 * (1.0 + 4.0 * r * r) / (delta * gamma_bar());
}

double nig_logpdf(const NigParams& p, double x) {
  double dx = x - p.mu;
  double q = std::sqrt(p.delta * p.delta + dx * dx);
  return std::log(p.alpha * p.delta / kPi) + p.delta * p.gamma_bar() +
         p.beta * dx + num::log_bessel_k1(p.alpha * q) - std::log(q);
}

double nig_pdf(const NigParams& p, double x) { return std::exp(nig_logpdf(p, x)); }

double nig_log_mgf(const NigParams& p, double u) {
  double bu = p.beta + u;
  if (std::fabs(bu) >= p.alpha)
    throw std::domain_error("nig_mgf: u outside the MGF domain");
  return p.mu * u +
         p.delta * (p.gamma_bar() - std::sqrt(p.alpha * p.alpha - bu * bu));
}

double nig_mgf(const NigParams& p, double u) { return std::exp(nig_log_mgf(p, u)); }

Eigen::VectorXd sample_nig(const NigParams& p, Eigen::Index n,
                           std::uint64_t seed, std::uint64_t stream) {
  if (!p.valid()) throw std::domain_error("sample_nig: invalid parameters");
  Rng rng(seed, stream);
  Eigen::VectorXd out(n);
  const double ig_mean = p.subordinator_mean();
  const double ig_shape = p.subordinator_shape();
  for (Eigen::Index i = 0; i < n; ++i) {
    double z = rng.next_inverse_gaussian(ig_mean, ig_shape);
    out[i] = p.mu + p.beta * z + std::sqrt(z) * rng.next_normal();
  }
  return out;
}

NigParams fit_nig(const Eigen::VectorXd& samples) {
  const Eigen::Index n = samples.size();
  if (n < 8) throw std::domain_error("fit_nig: need at least 8 samples");
  double m1 = samples.mean();
  Eigen::ArrayXd c = samples.array() - m1;
  double v = c.square().mean();
  if (v <= 0.0) throw std::domain_error("fit_nig: degenerate sample");
  double s = c.cube().mean() / std::pow(v, 1.5);
  double k = c.square().square().mean() / (v * v) - 3.0;

  // Moment-matched start projected into the feasible cone.
  double w_denom = k - (4.0 / 3.0) * s * s;
  double w = w_denom > 0.05 ? 3.0 / w_denom : 3.0 / 0.5;
  double rho2 = std::min(s * s * w / 9.0, 0.81);
  double rho = (s >= 0 ? 1.0 : -1.0) * std::sqrt(rho2);
  double cfac = 1.0 / std::sqrt(1.0 - rho * rho);
  double gbar = cfac * std::sqrt(w / v);
  NigParams init;
  init.alpha = cfac * gbar;
  init.beta = rho * init.alpha;
  init.delta = w / gbar;
  init.mu = m1 - init.delta * init.beta / gbar;
  if (!init.valid()) {
    init.alpha = 2.0 / std::sqrt(v);
    init.beta = 0.0;
    init.delta = 2.0 / init.alpha;  // unit-ish variance scale
    init.mu = m1;
  }

  auto neg_mean_loglik = [&](const Eigen::VectorXd& x) {
    NigParams p = from_unconstrained(x);
    if (!p.valid()) return 1e10;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double lp = nig_logpdf(p, samples[i]);
      if (!std::isfinite(lp)) return 1e10;
      total += lp;
    }
    return -total / double(n);
  };

  Eigen::VectorXd x0 = to_unconstrained(init);
  auto best = num::bfgs(neg_mean_loglik, x0, 400, 1e-9);
  auto nm = num::nelder_mead(neg_mean_loglik, best.x, 0.05, 2000, 1e-14);
  if (nm.fval < best.fval) best = nm;
  if (best.fval >= 1e9) throw std::runtime_error("fit_nig: optimization failed");
  return from_unconstrained(best.x);
}

NigParams standardized_nig(double alpha, double beta) {
  if (!(alpha > 0.0) || std::fabs(beta) >= alpha)
    throw std::domain_error("standardized_nig: need |beta| < alpha");
  NigParams p;
  p.alpha = alpha;
  p.beta = beta;
  double g = std::sqrt(alpha * alpha - beta * beta);
  p.delta = g * g * g / (alpha * alpha);  // unit variance
  p.mu = -p.delta * beta / g;             // zero mean
  return p;
}

}  // namespace envmarket
