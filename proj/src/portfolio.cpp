#include "envmarket/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "envmarket/analytics.hpp"

namespace envmarket {

namespace {

constexpr double kPivEps = 1e-9;

// Tableau simplex step loop. Row `m` holds reduced costs, column `rhs_col`
// the right-hand side (with T(m, rhs_col) = -objective). Bland's rule:
// entering column is the lowest-index negative reduced cost, leaving row the
// lowest basis index among minimum-ratio ties. Returns false when unbounded.
bool run_simplex(Eigen::MatrixXd& T, std::vector<int>& basis, int scan_cols,
                 int rhs_col) {
  const int m = int(T.rows()) - 1;
  for (;;) {
    int enter = -1;
    for (int j = 0; j < scan_cols; ++j)
      if (T(m, j) < -kPivEps) {
        enter = j;
        break;
      }
    if (enter < 0) return true;
    int leave = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      if (T(i, enter) > kPivEps) {
        double ratio = T(i, rhs_col) / T(i, enter);
        if (leave < 0 || ratio < best - 1e-14 ||
            (std::fabs(ratio - best) <= 1e-14 && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave < 0) return false;
    T.row(leave) /= T(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      double f = T(i, enter);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    basis[leave] = enter;
  }
}

}  // namespace

LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                  const Eigen::VectorXd& b) {
  const int m = int(A.rows()), n = int(A.cols());
  if (c.size() != n || b.size() != m)
    throw std::domain_error("solve_lp: dimension mismatch");
  Eigen::MatrixXd A2 = A;
  Eigen::VectorXd b2 = b;
  for (int i = 0; i < m; ++i)
    if (b2[i] < 0.0) {
      A2.row(i) *= -1.0;
      b2[i] *= -1.0;
    }
  const int total = n + m;  // artificials appended
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, total + 1);
  T.block(0, 0, m, n) = A2;
  T.block(0, n, m, m).setIdentity();
  T.col(total).head(m) = b2;
  std::vector<int> basis(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) basis[size_t(i)] = n + i;

  // Phase 1: minimize the artificial sum.
  for (int j = 0; j < n; ++j) T(m, j) = -A2.col(j).sum();
  T(m, total) = -b2.sum();
  run_simplex(T, basis, total, total);

  LpResult out;
  if (-T(m, total) > 1e-7) {
    out.status = LpResult::Status::infeasible;
    return out;
  }
  // Pivot remaining artificials out where a nonzero original entry exists;
  // rows without one are redundant and stay inert at zero.
  for (int i = 0; i < m; ++i) {
    if (basis[size_t(i)] < n) continue;
    for (int j = 0; j < n; ++j) {
      if (std::fabs(T(i, j)) > kPivEps) {
        T.row(i) /= T(i, j);
        for (int r = 0; r <= m; ++r) {
          if (r == i) continue;
          double f = T(r, j);
          if (f != 0.0) T.row(r) -= f * T.row(i);
        }
        basis[size_t(i)] = j;
        break;
      }
    }
  }

  // Phase 2 with the real costs (artificial columns excluded from entering).
  T.row(m).setZero();
  for (int j = 0; j < n; ++j) T(m, j) = c[j];
  for (int i = 0; i < m; ++i)
    if (basis[size_t(i)] < n) T.row(m) -= c[basis[size_t(i)]] * T.row(i);
  if (!run_simplex(T, basis, n, total)) {
    out.status = LpResult::Status::unbounded;
    return out;
  }
  out.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[size_t(i)] < n) out.x[basis[size_t(i)]] = T(i, total);
  out.objective = -T(m, total);
  out.status = LpResult::Status::optimal;
  return out;
}

std::vector<double> default_gamma_grid() {
  std::vector<double> g(100);
  for (int i = 0; i < 100; ++i) g[size_t(i)] = double(i) / 100.0;
  return g;
}

double portfolio_cvar(const Eigen::MatrixXd& scenarios, const Eigen::VectorXd& w,
                      double level) {
  if (w.size() != scenarios.cols())
    throw std::domain_error("portfolio_cvar: weight length mismatch");
  return var_cvar(scenarios * w, level).cvar;
}

namespace {

struct Moments {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;      // as used by the optimizer (possibly ridged)
  Eigen::MatrixXd sigma_raw;  // sample covariance
  bool ridged = false;
};

Moments sample_moments(const Eigen::MatrixXd& returns) {
  const Eigen::Index n = returns.rows(), L = returns.cols();
  if (n < 2) throw std::domain_error("frontier: need at least 2 return rows");
  if (L < 1) throw std::domain_error("frontier: no assets");
  if (!returns.allFinite()) throw std::domain_error("frontier: non-finite input");
  Moments mo;
  mo.mu = returns.colwise().mean();
  Eigen::MatrixXd centered = returns.rowwise() - mo.mu.transpose();
  mo.sigma_raw = centered.transpose() * centered / double(n - 1);
  mo.sigma = mo.sigma_raw;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mo.sigma);
  double top = std::max(1.0, es.eigenvalues().maxCoeff());
  if (es.eigenvalues().minCoeff() < 1e-12 * top) {
    double ridge = std::max(1e-10, 1e-10 * mo.sigma.trace() / double(L));
    mo.sigma += ridge * Eigen::MatrixXd::Identity(L, L);
    mo.ridged = true;
  }
  return mo;
}

// KKT system for the support A: [2(1-g)Sigma_AA, 1; 1', 0] [w_A; lam] =
// [g mu_A; 1]. Returns false when the system is numerically singular.
bool solve_support(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu,
                   double gamma, const std::vector<int>& ids,
                   Eigen::VectorXd* w_out, double* lambda_out) {
  const int k = int(ids.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  Eigen::VectorXd rhs(k + 1);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j)
      kkt(i, j) = 2.0 * (1.0 - gamma) * sigma(ids[size_t(i)], ids[size_t(j)]);
    kkt(i, k) = kkt(k, i) = 1.0;
    rhs[i] = gamma * mu[ids[size_t(i)]];
  }
  rhs[k] = 1.0;
  Eigen::VectorXd sol = kkt.colPivHouseholderQr().solve(rhs);
  double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (!sol.allFinite() || (kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale)
    return false;
  *w_out = sol.head(k);
  *lambda_out = sol[k];
  return true;
}

Eigen::VectorXd expand(const Eigen::VectorXd& w_a, const std::vector<int>& ids,
                       Eigen::Index L) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(L);
  for (size_t i = 0; i < ids.size(); ++i) w[ids[i]] = std::max(0.0, w_a[Eigen::Index(i)]);
  double s = w.sum();
  if (s > 0.0) w /= s;
  return w;
}

double mv_objective(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu,
                    double gamma, const Eigen::VectorXd& w) {
  return gamma * mu.dot(w) - (1.0 - gamma) * w.dot(sigma * w);
}

// Exact optimum by enumerating every support set (L <= 16).
Eigen::VectorXd mv_enumerate(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu,
                             double gamma) {
  const Eigen::Index L = sigma.rows();
  double best_obj = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_w;
  for (unsigned mask = 1; mask < (1u << unsigned(L)); ++mask) {
    std::vector<int> ids;
    for (int j = 0; j < int(L); ++j)
      if (mask & (1u << unsigned(j))) ids.push_back(j);
    Eigen::VectorXd w_a;
    double lambda = 0.0;
    if (!solve_support(sigma, mu, gamma, ids, &w_a, &lambda)) continue;
    if (w_a.minCoeff() < -1e-9) continue;
    Eigen::VectorXd w = expand(w_a, ids, L);
    double obj = mv_objective(sigma, mu, gamma, w);
    if (obj > best_obj) {
      best_obj = obj;
      best_w = w;
    }
  }
  if (best_w.size() == 0)
    throw std::runtime_error("mean_variance_frontier: no feasible support");
  return best_w;
}

// Primal active-set iteration for larger L.
Eigen::VectorXd mv_active_set(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu,
                              double gamma) {
  const Eigen::Index L = sigma.rows();
  std::vector<int> ids(static_cast<size_t>(L));
  std::iota(ids.begin(), ids.end(), 0);
  for (int iter = 0; iter < 1000; ++iter) {
    Eigen::VectorXd w_a;
    double lambda = 0.0;
    if (!solve_support(sigma, mu, gamma, ids, &w_a, &lambda))
      throw std::runtime_error("mean_variance_frontier: singular KKT system");
    int worst = -1;
    double worst_val = -1e-10;
    for (Eigen::Index i = 0; i < w_a.size(); ++i)
      if (w_a[i] < worst_val) {
        worst_val = w_a[i];
        worst = int(i);
      }
    if (worst >= 0) {
      ids.erase(ids.begin() + worst);
      if (ids.empty())
        throw std::runtime_error("mean_variance_frontier: empty support");
      continue;
    }
    Eigen::VectorXd w = expand(w_a, ids, L);
    Eigen::VectorXd grad = 2.0 * (1.0 - gamma) * (sigma * w) - gamma * mu;
    int add = -1;
    double add_val = -1e-9;
    for (int j = 0; j < int(L); ++j) {
      if (std::find(ids.begin(), ids.end(), j) != ids.end()) continue;
      double slack = grad[j] - lambda;
      if (slack < add_val) {
        add_val = slack;
        add = j;
      }
    }
    if (add < 0) return w;
    ids.insert(std::lower_bound(ids.begin(), ids.end(), add), add);
  }
  throw std::runtime_error("mean_variance_frontier: active set did not converge");
}

}  // namespace

std::vector<FrontierPoint> mean_variance_frontier(const Eigen::MatrixXd& returns,
                                                  const std::vector<double>& gammas,
                                                  bool long_only) {
  Moments mo = sample_moments(returns);
  const Eigen::Index L = returns.cols();
  std::vector<FrontierPoint> out;
  out.reserve(gammas.size());
  for (double gamma : gammas) {
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::domain_error("mean_variance_frontier: gamma outside [0,1)");
    Eigen::VectorXd w;
    if (long_only) {
      w = L <= 16 ? mv_enumerate(mo.sigma, mo.mu, gamma)
                  : mv_active_set(mo.sigma, mo.mu, gamma);
    } else {
      std::vector<int> ids(static_cast<size_t>(L));
      std::iota(ids.begin(), ids.end(), 0);
      Eigen::VectorXd w_a;
      double lambda = 0.0;
      if (!solve_support(mo.sigma, mo.mu, gamma, ids, &w_a, &lambda))
        throw std::runtime_error("mean_variance_frontier: singular KKT system");
      w = w_a;
    }
    FrontierPoint pt;
    pt.gamma = gamma;
    pt.weights = w;
    pt.expected_return = mo.mu.dot(w);
    pt.risk = w.dot(mo.sigma_raw * w);
    pt.measure = RiskMeasure::variance;
    pt.ridge_applied = mo.ridged;
    out.push_back(std::move(pt));
  }
  return out;
}

namespace {

// Supergradient cut t >= q'w at the current weights: q is minus the average
// of the worst ceil(level*S) scenario rows, so q'w equals CVaR(w).
Eigen::VectorXd cvar_cut(const Eigen::MatrixXd& R, const Eigen::VectorXd& w,
                         Eigen::Index m_tail) {
  const Eigen::Index S = R.rows();
  Eigen::VectorXd port = R * w;
  std::vector<Eigen::Index> order(static_cast<size_t>(S));
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + (m_tail - 1), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return port[a] < port[b]; });
  Eigen::VectorXd q = Eigen::VectorXd::Zero(R.cols());
  for (Eigen::Index i = 0; i < m_tail; ++i) q -= R.row(order[size_t(i)]);
  return q / double(m_tail);
}

FrontierPoint cvar_point(const Eigen::MatrixXd& R, const Eigen::VectorXd& mu,
                         double level, Eigen::Index m_tail, double gamma,
                         bool long_only) {
  const Eigen::Index L = R.cols();
  const int wvars = long_only ? int(L) : 2 * int(L);
  std::vector<Eigen::VectorXd> cuts;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(L, 1.0 / double(L));
  cuts.push_back(cvar_cut(R, w, m_tail));
  double t_master = 0.0;
  for (int iter = 0; iter < 2000; ++iter) {
    const int K = int(cuts.size());
    const int n = wvars + 2 + K;  // w (or w+/w-), t+, t-, cut slacks
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1 + K, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(1 + K);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < int(L); ++j) {
      A(0, j) = 1.0;
      c[j] = -gamma * mu[j];
      if (!long_only) {
        A(0, int(L) + j) = -1.0;
        c[int(L) + j] = gamma * mu[j];
      }
    }
    b[0] = 1.0;
    c[wvars] = 1.0 - gamma;
    c[wvars + 1] = -(1.0 - gamma);
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd& q = cuts[size_t(k)];
      for (int j = 0; j < int(L); ++j) {
        A(1 + k, j) = -q[j];
        if (!long_only) A(1 + k, int(L) + j) = q[j];
      }
      A(1 + k, wvars) = 1.0;
      A(1 + k, wvars + 1) = -1.0;
      A(1 + k, wvars + 2 + k) = -1.0;
    }
    LpResult lp = solve_lp(c, A, b);
    if (lp.status == LpResult::Status::unbounded)
      throw std::runtime_error("mean_cvar_frontier: unbounded (short sales)");
    if (lp.status != LpResult::Status::optimal)
      throw std::runtime_error("mean_cvar_frontier: master LP failed");
    for (Eigen::Index j = 0; j < L; ++j)
      w[j] = long_only ? lp.x[j] : lp.x[j] - lp.x[L + j];
    t_master = lp.x[wvars] - lp.x[wvars + 1];
    double cvar_true = portfolio_cvar(R, w, level);
    double gap = cvar_true - t_master;
    if (gap <= 1e-9 || (1.0 - gamma) * gap <= 1e-10) break;
    cuts.push_back(cvar_cut(R, w, m_tail));
    if (iter == 1999)
      throw std::runtime_error("mean_cvar_frontier: cutting plane stalled");
  }
  FrontierPoint pt;
  pt.gamma = gamma;
  pt.weights = w;
  pt.expected_return = mu.dot(w);
  pt.risk = portfolio_cvar(R, w, level);
  pt.measure = RiskMeasure::cvar;
  pt.cvar_level = level;
  return pt;
}

}  // namespace

std::vector<FrontierPoint> mean_cvar_frontier(const Eigen::MatrixXd& scenarios,
                                              double level,
                                              const std::vector<double>& gammas,
                                              bool long_only) {
  const Eigen::Index S = scenarios.rows(), L = scenarios.cols();
  if (S < 1 || L < 1) throw std::domain_error("mean_cvar_frontier: empty input");
  if (!scenarios.allFinite())
    throw std::domain_error("mean_cvar_frontier: non-finite input");
  if (!(level > 0.0 && level < 1.0))
    throw std::domain_error("mean_cvar_frontier: level outside (0,1)");
  Eigen::Index m_tail = std::min<Eigen::Index>(
      Eigen::Index(std::ceil(level * double(S))), S);
  Eigen::VectorXd mu = scenarios.colwise().mean();
  std::vector<FrontierPoint> out;
  out.reserve(gammas.size());
  for (double gamma : gammas) {
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::domain_error("mean_cvar_frontier: gamma outside [0,1)");
    out.push_back(cvar_point(scenarios, mu, level, m_tail, gamma, long_only));
  }
  return out;
}

}  // namespace envmarket
