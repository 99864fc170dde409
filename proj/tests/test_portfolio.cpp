#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "envmarket/analytics.hpp"
#include "envmarket/portfolio.hpp"

using namespace envmarket;

namespace {

// dense 0.001-step grid search over the 3-simplex
struct GridBest {
  Eigen::VectorXd w;
  double objective = -std::numeric_limits<double>::infinity();
};

GridBest grid_search_3(const std::function<double(const Eigen::VectorXd&)>& obj,
                       int steps = 1000) {
  GridBest best;
  Eigen::VectorXd w(3);
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps - i; ++j) {
      w << double(i) / steps, double(j) / steps, double(steps - i - j) / steps;
      double v = obj(w);
      if (v > best.objective) {
        best.objective = v;
        best.w = w;
      }
    }
  }
  return best;
}

Eigen::MatrixXd gaussian_scenarios(int S, const Eigen::VectorXd& mu,
                                   const Eigen::MatrixXd& chol, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  const int L = int(mu.size());
  Eigen::MatrixXd out(S, L);
  Eigen::VectorXd z(L);
  for (int s = 0; s < S; ++s) {
    for (int l = 0; l < L; ++l) z(l) = nd(gen);
    out.row(s) = (mu + chol * z).transpose();
  }
  return out;
}

double sample_variance_obj(const Eigen::MatrixXd& r, const Eigen::VectorXd& w,
                           double gamma) {
  Eigen::VectorXd port = r * w;
  double m = port.mean();
  double var = (port.array() - m).square().sum() / double(r.rows() - 1);
  return gamma * m - (1.0 - gamma) * var;
}

}  // namespace

// ---- LP solver ----

TEST_CASE("solve_lp on a textbook problem") {
  // min -x1 - 2x2 s.t. x1 + x2 + s1 = 4, x1 + 3x2 + s2 = 6, x >= 0
  Eigen::VectorXd c(4);
  c << -1.0, -2.0, 0.0, 0.0;
  Eigen::MatrixXd A(2, 4);
  A << 1, 1, 1, 0, 1, 3, 0, 1;
  Eigen::VectorXd b(2);
  b << 4, 6;
  LpResult r = solve_lp(c, A, b);
  REQUIRE(r.status == LpResult::Status::optimal);
  CHECK(r.x(0) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.objective == doctest::Approx(-5.0).epsilon(1e-10));
}

TEST_CASE("solve_lp detects infeasible and unbounded problems") {
  // x1 = -1 with x1 >= 0 is infeasible
  Eigen::VectorXd c1(1), b1(1);
  c1 << 1.0;
  b1 << -1.0;
  Eigen::MatrixXd A1(1, 1);
  A1 << 1.0;
  CHECK(solve_lp(c1, A1, b1).status == LpResult::Status::infeasible);
  // min -x1 s.t. x1 - x2 = 0: ray x1 = x2 -> unbounded
  Eigen::VectorXd c2(2), b2(1);
  c2 << -1.0, 0.0;
  b2 << 0.0;
  Eigen::MatrixXd A2(1, 2);
  A2 << 1.0, -1.0;
  CHECK(solve_lp(c2, A2, b2).status == LpResult::Status::unbounded);
}

TEST_CASE("solve_lp handles degenerate vertices (Bland's rule terminates)") {
  // degenerate: two constraints meet at the same vertex
  Eigen::VectorXd c(4);
  c << -1.0, -1.0, 0.0, 0.0;
  Eigen::MatrixXd A(2, 4);
  A << 1, 0, 1, 0, 1, 0, 0, 1;  // x1 <= 1 twice
  Eigen::VectorXd b(2);
  b << 1, 1;
  LpResult r = solve_lp(c, A, b);
  CHECK(r.status == LpResult::Status::unbounded);  // x2 free to grow
}

// ---- mean-variance ----

TEST_CASE("identity covariance with equal means gives equal weights") {
  // scenario matrix with exactly equal column means and identical variances:
  // permuted copies of the same column
  Eigen::VectorXd base(4);
  base << -0.02, 0.0, 0.01, 0.05;
  Eigen::MatrixXd r(4, 3);
  r.col(0) = base;
  r.col(1) << 0.0, 0.01, 0.05, -0.02;
  r.col(2) << 0.01, 0.05, -0.02, 0.0;
  auto pts = mean_variance_frontier(r, {0.0}, true);
  REQUIRE(pts.size() == 1);
  // symmetric problem: the minimum-variance point is unique only if the
  // covariance is nondegenerate; check feasibility + objective optimality
  // against the grid instead of the weights themselves
  double got = sample_variance_obj(r, pts[0].weights, 0.0);
  GridBest best = grid_search_3(
      [&](const Eigen::VectorXd& w) { return sample_variance_obj(r, w, 0.0); }, 200);
  CHECK(got >= best.objective - 1e-6);
  CHECK(pts[0].weights.sum() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("identity covariance, literally: closed-form equal split") {
  // synthetic moments via a scenario matrix whose sample covariance is I
  // and whose means are equal: use an orthogonal design
  Eigen::MatrixXd r(4, 2);
  r << 1, 1, -1, 1, 1, -1, -1, -1;  // cov = I (sample, n-1), means 0
  auto pts = mean_variance_frontier(r, {0.0, 0.5}, true);
  for (const auto& p : pts) {
    CHECK(p.weights(0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(p.weights(1) == doctest::Approx(0.5).epsilon(1e-8));
  }
}

TEST_CASE("gamma near one concentrates on the best asset") {
  std::mt19937 gen(5);
  std::normal_distribution<double> nd;
  const int S = 400;
  Eigen::MatrixXd r(S, 2);
  for (int s = 0; s < S; ++s) {
    r(s, 0) = 0.001 + 0.01 * nd(gen);
    r(s, 1) = 0.02 + 0.01 * nd(gen);  // clearly higher mean
  }
  auto pts = mean_variance_frontier(r, {0.99}, true);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].weights(1) > 0.95);
}

TEST_CASE("mean-variance against the 0.001 grid on three assets") {
  std::mt19937 gen(17);
  std::normal_distribution<double> nd;
  const int S = 300;
  Eigen::MatrixXd r(S, 3);
  for (int s = 0; s < S; ++s) {
    double f = nd(gen);
    r(s, 0) = 0.005 + 0.02 * f + 0.015 * nd(gen);
    r(s, 1) = 0.010 + 0.01 * f + 0.020 * nd(gen);
    r(s, 2) = 0.002 + 0.03 * nd(gen);
  }
  for (double gamma : {0.0, 0.5, 0.99}) {
    auto pts = mean_variance_frontier(r, {gamma}, true);
    REQUIRE(pts.size() == 1);
    double got = sample_variance_obj(r, pts[0].weights, gamma);
    GridBest best = grid_search_3(
        [&](const Eigen::VectorXd& w) { return sample_variance_obj(r, w, gamma); });
    CHECK(got >= best.objective - 1e-6);
    CHECK(pts[0].weights.minCoeff() >= -1e-10);
    CHECK(pts[0].weights.sum() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(pts[0].measure == RiskMeasure::variance);
  }
}

TEST_CASE("frontier is monotone in gamma") {
  std::mt19937 gen(29);
  std::normal_distribution<double> nd;
  const int S = 500;
  Eigen::MatrixXd r(S, 4);
  for (int s = 0; s < S; ++s)
    for (int l = 0; l < 4; ++l)
      r(s, l) = 0.002 * (l + 1) + 0.01 * (l + 1) * nd(gen);
  auto pts = mean_variance_frontier(r, default_gamma_grid(), true);
  REQUIRE(pts.size() == 100);
  for (size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].expected_return >= pts[i - 1].expected_return - 1e-9);
    CHECK(pts[i].risk >= pts[i - 1].risk - 1e-9);
  }
  // gamma = 0 is the minimum-variance point
  for (const auto& p : pts) CHECK(p.risk >= pts[0].risk - 1e-9);
}

TEST_CASE("unconstrained frontier can short") {
  // one asset strongly dominated: shorting it should help for high gamma
  std::mt19937 gen(40);
  std::normal_distribution<double> nd;
  const int S = 400;
  Eigen::MatrixXd r(S, 2);
  for (int s = 0; s < S; ++s) {
    double f = nd(gen);
    r(s, 0) = 0.03 + 0.01 * f + 0.01 * nd(gen);
    r(s, 1) = -0.02 + 0.01 * f + 0.01 * nd(gen);  // same factor, worse mean
  }
  auto pts = mean_variance_frontier(r, {0.1}, false);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].weights.minCoeff() < -1e-6);
  CHECK(std::fabs(pts[0].weights.sum() - 1.0) < 1e-6);
}

// ---- mean-CVaR ----

TEST_CASE("mean-cvar two assets, five scenarios, exact enumeration") {
  Eigen::MatrixXd r(5, 2);
  r << -0.05, 0.01, 0.02, -0.03, 0.01, 0.02, -0.01, 0.00, 0.04, 0.01;
  double q = 0.2;  // worst 1 of 5
  double gamma = 0.0;
  auto pts = mean_cvar_frontier(r, q, {gamma}, true);
  REQUIRE(pts.size() == 1);
  // brute force over the 1-simplex
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100000; ++i) {
    Eigen::VectorXd w(2);
    w << double(i) / 100000.0, 1.0 - double(i) / 100000.0;
    best = std::min(best, portfolio_cvar(r, w, q));
  }
  CHECK(pts[0].risk == doctest::Approx(best).epsilon(1e-6));
  // reported risk must equal the recomputed empirical CVaR of the weights
  CHECK(portfolio_cvar(r, pts[0].weights, q) ==
        doctest::Approx(pts[0].risk).epsilon(1e-9));
}

TEST_CASE("mean-cvar against the 0.001 grid on three assets") {
  std::mt19937 gen(61);
  std::normal_distribution<double> nd;
  const int S = 200;
  Eigen::MatrixXd r(S, 3);
  for (int s = 0; s < S; ++s) {
    double f = nd(gen);
    r(s, 0) = 0.004 + 0.02 * f + 0.01 * nd(gen);
    r(s, 1) = 0.008 + 0.015 * f + 0.02 * nd(gen);
    r(s, 2) = 0.001 + 0.025 * nd(gen);
  }
  double q = 0.1;
  for (double gamma : {0.0, 0.5, 0.99}) {
    auto pts = mean_cvar_frontier(r, q, {gamma}, true);
    REQUIRE(pts.size() == 1);
    auto obj = [&](const Eigen::VectorXd& w) {
      Eigen::VectorXd port = r * w;
      return gamma * port.mean() - (1.0 - gamma) * portfolio_cvar(r, w, q);
    };
    double got = obj(pts[0].weights);
    GridBest best = grid_search_3(obj, 200);
    CHECK(got >= best.objective - 1e-6);
    CHECK(pts[0].weights.minCoeff() >= -1e-10);
    CHECK(pts[0].weights.sum() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(portfolio_cvar(r, pts[0].weights, q) ==
          doctest::Approx(pts[0].risk).epsilon(1e-8));
  }
}

TEST_CASE("mean-cvar frontier is monotone in gamma") {
  Eigen::VectorXd mu(3);
  mu << 0.002, 0.006, 0.012;
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(3, 3);
  chol(0, 0) = 0.01;
  chol(1, 0) = 0.004;
  chol(1, 1) = 0.015;
  chol(2, 0) = 0.002;
  chol(2, 1) = 0.006;
  chol(2, 2) = 0.025;
  Eigen::MatrixXd r = gaussian_scenarios(600, mu, chol, 77);
  auto pts = mean_cvar_frontier(r, 0.05, default_gamma_grid(), true);
  REQUIRE(pts.size() == 100);
  for (size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].expected_return >= pts[i - 1].expected_return - 1e-7);
    CHECK(pts[i].risk >= pts[i - 1].risk - 1e-7);
  }
}

TEST_CASE("degenerate identical scenarios are handled") {
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(10, 3, 0.01);
  auto pts = mean_cvar_frontier(r, 0.2, {0.0, 0.5}, true);
  for (const auto& p : pts) {
    CHECK(p.weights.sum() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(p.risk == doctest::Approx(-0.01).epsilon(1e-8));
    CHECK(p.expected_return == doctest::Approx(0.01).epsilon(1e-10));
  }
  auto mv = mean_variance_frontier(r, {0.0}, true);
  REQUIRE(mv.size() == 1);
  CHECK(mv[0].ridge_applied);
  CHECK(mv[0].weights.sum() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("objective homogeneity: scaling returns scales the frontier") {
  std::mt19937 gen(9);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd r(150, 2);
  for (int s = 0; s < 150; ++s) {
    r(s, 0) = 0.01 + 0.02 * nd(gen);
    r(s, 1) = 0.005 + 0.01 * nd(gen);
  }
  double c = 2.0;
  auto a = mean_cvar_frontier(r, 0.1, {0.3}, true);
  auto b = mean_cvar_frontier(c * r, 0.1, {0.3}, true);
  // CVaR is positively homogeneous, so the optimal weights are unchanged and
  // risk/return scale linearly
  CHECK(b[0].risk == doctest::Approx(c * a[0].risk).epsilon(1e-6));
  CHECK(b[0].expected_return ==
        doctest::Approx(c * a[0].expected_return).epsilon(1e-6));
}

TEST_CASE("gamma validation") {
  Eigen::MatrixXd r = Eigen::MatrixXd::Random(50, 2);
  CHECK_THROWS(mean_variance_frontier(r, {1.0}, true));
  CHECK_THROWS(mean_variance_frontier(r, {-0.1}, true));
  CHECK_THROWS(mean_cvar_frontier(r, 0.1, {1.5}, true));
  CHECK_THROWS(mean_cvar_frontier(r, 0.0, {0.5}, true));
  CHECK_THROWS(mean_cvar_frontier(r, 1.0, {0.5}, true));
}
