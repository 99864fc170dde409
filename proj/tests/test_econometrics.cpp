#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "envmarket/garch.hpp"
#include "envmarket/nig.hpp"
#include "envmarket/numerics.hpp"
#include "envmarket/rng.hpp"

using namespace envmarket;

namespace {

Eigen::VectorXd simulate_garch11(double a0, double a1, double b1, int n,
                                 std::uint64_t seed) {
  Rng rng(seed);
  double sigma2 = a0 / (1.0 - a1 - b1);
  Eigen::VectorXd r(n);
  double z_prev = 0.0;
  for (int t = 0; t < n; ++t) {
    if (t > 0) sigma2 = a0 + a1 * z_prev * z_prev + b1 * sigma2;
    double z = std::sqrt(sigma2) * rng.next_normal();
    r(t) = z;
    z_prev = z;
  }
  return r;
}

}  // namespace

TEST_CASE("information criteria formulas") {
  auto [aic, bic] = information_criteria(-10.0, 3, 100);
  CHECK(aic == doctest::Approx(26.0).epsilon(1e-14));
  CHECK(bic == doctest::Approx(3.0 * std::log(100.0) + 20.0).epsilon(1e-14));
  // n = e^2 makes ln n = 2, so BIC = 2k - 2l = AIC
  int n_e2 = int(std::round(std::exp(2.0)));
  auto [aic2, bic2] = information_criteria(-10.0, 3, n_e2);
  CHECK(bic2 == doctest::Approx(3.0 * std::log(double(n_e2)) + 20.0).epsilon(1e-14));
  // exact version of the identity at ln n = 2
  CHECK(3.0 * 2.0 + 20.0 == doctest::Approx(26.0));
  (void)aic2;
}

TEST_CASE("iid gaussian data: arch effects vanish") {
  Rng rng(2024);
  const int n = 5000;
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) r(i) = 0.3 * rng.next_normal();
  double sample_var = (r.array() - r.mean()).square().sum() / double(n);
  FittedModel m = fit_model(r, VolFamily::garch11, InnovationKind::normal);
  CHECK(m.vol.alpha1 < 0.05);
  double uncond = m.vol.unconditional_variance(sample_var);
  CHECK(uncond == doctest::Approx(sample_var).epsilon(0.05));
}

TEST_CASE("garch11 parameter recovery on simulated data") {
  Eigen::VectorXd r = simulate_garch11(0.1, 0.1, 0.8, 5000, 77);
  FittedModel m = fit_model(r, VolFamily::garch11, InnovationKind::normal);
  CHECK(std::fabs(m.vol.alpha1 - 0.1) <= 0.08);
  CHECK(std::fabs(m.vol.beta1 - 0.8) <= 0.08);
  CHECK(m.vol.alpha1 + m.vol.beta1 < 1.0);
  CHECK(m.vol.alpha0 > 0.0);
}

TEST_CASE("constant series is rejected") {
  Eigen::VectorXd r = Eigen::VectorXd::Constant(50, 0.01);
  CHECK_THROWS(fit_model(r, VolFamily::garch11));
  CHECK_THROWS(select_model(r, SelectionCriterion::bic));
}

TEST_CASE("fit is a stationary point of the mean log likelihood") {
  Eigen::VectorXd r = simulate_garch11(0.05, 0.12, 0.75, 1500, 5);
  FittedModel m = fit_model(r, VolFamily::garch11, InnovationKind::normal);
  const int n = int(r.size());
  // per-observation mean log likelihood as a function of the natural params
  auto f = [&](const Eigen::VectorXd& x) {
    MeanSpec mean = m.mean;
    mean.phi0 = x(0);
    mean.theta1 = x(1);
    VolSpec vol = m.vol;
    vol.alpha0 = x(2);
    vol.alpha1 = x(3);
    vol.beta1 = x(4);
    if (vol.alpha0 <= 0 || vol.alpha1 < 0 || vol.beta1 < 0 ||
        vol.alpha1 + vol.beta1 >= 1.0)
      return 1e10;
    return -model_loglik(mean, vol, InnovationKind::normal, m.nig, r) / double(n);
  };
  Eigen::VectorXd x(5);
  x << m.mean.phi0, m.mean.theta1, m.vol.alpha0, m.vol.alpha1, m.vol.beta1;
  Eigen::VectorXd g = num::fd_gradient(f, x);
  CHECK(g.cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("selection picks the minimal criterion with deterministic tie break") {
  Eigen::VectorXd r = simulate_garch11(0.1, 0.1, 0.8, 1200, 31);
  for (auto crit : {SelectionCriterion::aic, SelectionCriterion::bic}) {
    SelectionResult sel = select_model(r, crit);
    REQUIRE(!sel.candidates.empty());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [fam, fit] : sel.candidates)
      best = std::min(best, crit == SelectionCriterion::aic ? fit.aic : fit.bic);
    double chosen = crit == SelectionCriterion::aic ? sel.model.aic : sel.model.bic;
    CHECK(chosen == doctest::Approx(best).epsilon(1e-12));
    // anything tied with the winner must not have fewer parameters
    for (const auto& [fam, fit] : sel.candidates) {
      double c = crit == SelectionCriterion::aic ? fit.aic : fit.bic;
      if (std::fabs(c - chosen) < 1e-12)
        CHECK(fit.vol.param_count() >= sel.model.vol.param_count());
    }
  }
}

TEST_CASE("egarch filter stays positive and matches recursion") {
  Eigen::VectorXd r = simulate_garch11(0.1, 0.1, 0.8, 400, 9);
  FittedModel m = fit_model(r, VolFamily::egarch11, InnovationKind::normal);
  REQUIRE(m.variances.size() == r.size());
  for (int t = 0; t < r.size(); ++t) CHECK(m.variances(t) > 0.0);
  // re-run the published recursion and compare
  double abs_mean = innovation_abs_mean(m.innovation, m.nig);
  FilterResult fr = filter_series(m.mean, m.vol, r, abs_mean);
  for (int t = 0; t < r.size(); ++t)
    CHECK(fr.sigma2(t) == doctest::Approx(m.variances(t)).epsilon(1e-10));
}

TEST_CASE("one-step forecasts follow the fitted recursion") {
  Eigen::VectorXd r = simulate_garch11(0.1, 0.1, 0.8, 600, 13);
  FittedModel m = fit_model(r, VolFamily::garch11, InnovationKind::normal);
  double expect = m.vol.alpha0 + m.vol.alpha1 * m.last_z * m.last_z +
                  m.vol.beta1 * m.last_variance;
  CHECK(m.one_step_variance() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(m.one_step_mean() ==
        doctest::Approx(m.mean.phi0 + m.mean.theta1 * m.last_z).epsilon(1e-12));
}

TEST_CASE("normal innovation abs mean is sqrt(2/pi)") {
  NigParams dummy;
  CHECK(innovation_abs_mean(InnovationKind::normal, dummy) ==
        doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-10));
}

// ---- NIG distribution ----

TEST_CASE("nig mgf closed form") {
  NigParams p;  // alpha 2, beta 0, delta 1, mu 0
  p.alpha = 2.0;
  p.beta = 0.0;
  p.delta = 1.0;
  p.mu = 0.0;
  CHECK(nig_mgf(p, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(nig_mgf(p, 1.0) ==
        doctest::Approx(std::exp(2.0 - std::sqrt(3.0))).epsilon(1e-12));
  CHECK(nig_mgf(p, 1.0) == doctest::Approx(1.3072787).epsilon(1e-6));
  // symmetry in u when beta = 0
  CHECK(nig_mgf(p, 0.7) == doctest::Approx(nig_mgf(p, -0.7)).epsilon(1e-13));
  CHECK_THROWS(nig_mgf(p, 2.0));
  CHECK_THROWS(nig_mgf(p, -2.5));
}

TEST_CASE("nig mgf against monte carlo") {
  NigParams p;
  p.alpha = 2.0;
  p.beta = 0.5;
  p.delta = 1.2;
  p.mu = -0.1;
  Eigen::VectorXd s = sample_nig(p, 1000000, 99);
  double mc = (s.array()).exp().mean();  // u = 1, inside the domain
  CHECK(mc == doctest::Approx(nig_mgf(p, 1.0)).epsilon(0.01));
}

TEST_CASE("nig sampler moments and determinism") {
  NigParams p;
  p.alpha = 2.0;
  p.beta = 0.8;
  p.delta = 1.0;
  p.mu = 0.3;
  const Eigen::Index n = 200000;
  Eigen::VectorXd s = sample_nig(p, n, 4242);
  double mean = s.mean();
  double var = (s.array() - mean).square().sum() / double(n);
  double se_mean = std::sqrt(p.variance() / double(n));
  CHECK(std::fabs(mean - p.mean()) < 4.0 * se_mean);
  CHECK(var == doctest::Approx(p.variance()).epsilon(0.03));
  Eigen::VectorXd s2 = sample_nig(p, n, 4242);
  CHECK((s - s2).cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd s3 = sample_nig(p, 100, 4242, 1);
  CHECK(s3(0) != s(0));
}

TEST_CASE("nig density integrates to one and matches mgf slope") {
  NigParams p;
  p.alpha = 1.5;
  p.beta = -0.4;
  p.delta = 0.9;
  p.mu = 0.2;
  // trapezoid over a wide grid
  double lo = -40.0, hi = 40.0;
  int steps = 400000;
  double h = (hi - lo) / steps, total = 0.0, first = 0.0;
  for (int i = 0; i <= steps; ++i) {
    double x = lo + i * h;
    double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    double f = nig_pdf(p, x);
    total += w * f * h;
    first += w * x * f * h;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(first == doctest::Approx(p.mean()).epsilon(1e-5));
}

TEST_CASE("nig mle recovers parameters at n = 1e5") {
  NigParams truth;
  truth.alpha = 2.0;
  truth.beta = 0.0;
  truth.delta = 1.0;
  truth.mu = 0.0;
  Eigen::VectorXd s = sample_nig(truth, 100000, 7);
  NigParams hat = fit_nig(s);
  CHECK(std::fabs(hat.alpha - truth.alpha) <= 0.1 * truth.alpha);
  CHECK(std::fabs(hat.beta) <= 0.1 * truth.alpha);  // symmetric target
  CHECK(std::fabs(hat.delta - truth.delta) <= 0.1 * truth.delta);
  CHECK(std::fabs(hat.mu) <= 0.05);
}

TEST_CASE("nig mle on skewed data keeps the sign of beta") {
  NigParams truth;
  truth.alpha = 3.0;
  truth.beta = 1.5;
  truth.delta = 0.8;
  truth.mu = -0.2;
  Eigen::VectorXd s = sample_nig(truth, 100000, 21);
  NigParams hat = fit_nig(s);
  CHECK(hat.beta > 0.0);
  CHECK(std::fabs(hat.alpha - truth.alpha) <= 0.1 * truth.alpha + 0.2);
  CHECK(hat.mean() == doctest::Approx(s.mean()).epsilon(0.05));
}

TEST_CASE("standardized nig has unit variance and zero mean") {
  for (double a : {1.2, 2.0, 10.0}) {
    for (double b : {-0.5, 0.0, 0.7}) {
      NigParams p = standardized_nig(a, b);
      CHECK(p.mean() == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(p.variance() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK_THROWS(standardized_nig(1.0, 1.0));
  CHECK_THROWS(standardized_nig(-1.0, 0.0));
}

TEST_CASE("rng normal draws pass a ks check") {
  Rng rng(123);
  const int n = 10000;
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[size_t(i)] = rng.next_normal();
  std::sort(s.begin(), s.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    double cdf = num::norm_cdf(s[size_t(i)]);
    ks = std::max(ks, std::fabs(cdf - double(i + 1) / n));
    ks = std::max(ks, std::fabs(cdf - double(i) / n));
  }
  CHECK(ks < 0.02);
}

TEST_CASE("rng inverse gaussian matches moments") {
  Rng rng(55);
  const int n = 200000;
  double mean = 1.4, shape = 2.5;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.next_inverse_gaussian(mean, shape);
    CHECK(z > 0.0);
    acc += z;
    acc2 += z * z;
  }
  acc /= n;
  acc2 = acc2 / n - acc * acc;
  CHECK(acc == doctest::Approx(mean).epsilon(0.01));
  CHECK(acc2 == doctest::Approx(mean * mean * mean / shape).epsilon(0.03));
}

TEST_CASE("nig-innovation garch fit keeps a valid standardized law") {
  Eigen::VectorXd r = simulate_garch11(0.1, 0.1, 0.8, 800, 3);
  FittedModel m = fit_model(r, VolFamily::garch11, InnovationKind::nig);
  CHECK(m.nig.valid());
  CHECK(m.nig.mean() == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(m.nig.variance() == doctest::Approx(1.0).epsilon(1e-8));
  // two extra parameters relative to the normal fit
  auto [aic, bic] = information_criteria(m.log_likelihood, 2 + 3 + 2, m.n);
  CHECK(m.aic == doctest::Approx(aic).epsilon(1e-10));
  CHECK(m.bic == doctest::Approx(bic).epsilon(1e-10));
}
