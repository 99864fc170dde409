#include "envmarket/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "envmarket/numerics.hpp"

namespace envmarket {

namespace {

void check_xy(const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
  if (y.size() != x.size()) throw std::domain_error("regression: length mismatch");
  if (y.size() < 3) throw std::domain_error("regression: need at least 3 points");
  if ((x.array() - x.mean()).abs().maxCoeff() == 0.0)
    throw std::domain_error("regression: constant regressor");
}

// Weighted simple least squares; p-values from t with n-2 df.
RegressionResult weighted_ls(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& w) {
  const Eigen::Index n = y.size();
  double sw = w.sum();
  double mx = (w.array() * x.array()).sum() / sw;
  double my = (w.array() * y.array()).sum() / sw;
  double sxx = (w.array() * (x.array() - mx).square()).sum();
  double sxy = (w.array() * (x.array() - mx) * (y.array() - my)).sum();
  RegressionResult r;
  r.beta = sxy / sxx;
  r.alpha = my - r.beta * mx;
  Eigen::ArrayXd resid = y.array() - r.alpha - r.beta * x.array();
  double sse = (w.array() * resid.square()).sum();
  double sst = (w.array() * (y.array() - my).square()).sum();
  double df = double(n - 2);
  double s2 = sse / df;
  double se_beta = std::sqrt(s2 / sxx);
  double se_alpha = std::sqrt(s2 * (1.0 / sw + mx * mx / sxx));
  auto pval = [&](double coef, double se) {
    if (se == 0.0) return coef == 0.0 ? 1.0 : 0.0;
    return num::student_t_pvalue(coef / se, df);
  };
  r.alpha_pvalue = pval(r.alpha, se_alpha);
  r.beta_pvalue = pval(r.beta, se_beta);
  double r2 = sst > 0.0 ? 1.0 - sse / sst : 1.0;
  r.adjusted_r2 = 1.0 - (1.0 - r2) * double(n - 1) / df;
  return r;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RegressionResult ols(const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
  check_xy(y, x);
  RegressionResult r = weighted_ls(y, x, Eigen::VectorXd::Ones(y.size()));
  r.method = RegressionMethod::ols;
  return r;
}

RegressionResult robust_regress(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                                double tuning, int max_iter, double tol) {
  check_xy(y, x);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(y.size());
  RegressionResult r = weighted_ls(y, x, w);
  r.method = RegressionMethod::robust_irls;
  r.pvalues_approximate = true;
  r.converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::ArrayXd resid = y.array() - r.alpha - r.beta * x.array();
    std::vector<double> abs_resid(size_t(resid.size()));
    for (Eigen::Index i = 0; i < resid.size(); ++i)
      abs_resid[size_t(i)] = std::fabs(resid[i]);
    double scale = median_of(abs_resid) / 0.6745;
    if (scale <= 0.0) {
      // All residuals (effectively) zero: weights are all one and the
      // current iterate equals OLS.
      r.weights = Eigen::VectorXd::Ones(y.size());
      r.converged = true;
      return r;
    }
    Eigen::VectorXd wn(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      double u = resid[i] / (tuning * scale);
      wn[i] = std::fabs(u) < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
    }
    if (wn.sum() <= 0.0) break;  // degenerate; keep last iterate, flagged
    RegressionResult next = weighted_ls(y, x, wn);
    double change = std::max(std::fabs(next.alpha - r.alpha),
                             std::fabs(next.beta - r.beta));
    next.method = RegressionMethod::robust_irls;
    next.pvalues_approximate = true;
    next.weights = wn;
    bool done = change < tol;
    next.converged = done;
    r = next;
    if (done) break;
  }
  return r;
}

CapmResult jensen_alpha(const Eigen::VectorXd& asset, const Eigen::VectorXd& market,
                        double rf) {
  if (asset.size() != market.size())
    throw std::domain_error("jensen_alpha: length mismatch");
  Eigen::VectorXd ya = asset.array() - rf;
  Eigen::VectorXd xm = market.array() - rf;
  CapmResult out;
  out.regression = robust_regress(ya, xm);
  out.alpha = out.regression.alpha;
  out.beta = out.regression.beta;
  return out;
}

VarCvar var_cvar(const Eigen::VectorXd& returns, double q) {
  const Eigen::Index n = returns.size();
  if (n < 1) throw std::domain_error("var_cvar: empty input");
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("var_cvar: q outside (0,1)");
  std::vector<double> sorted(returns.data(), returns.data() + n);
  std::sort(sorted.begin(), sorted.end());
  Eigen::Index m = Eigen::Index(std::ceil(q * double(n)));
  m = std::min(m, n);
  VarCvar out;
  out.var = -sorted[size_t(m - 1)];
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) acc += sorted[size_t(i)];
  out.cvar = -acc / double(m);
  return out;
}

double sharpe(const Eigen::VectorXd& returns, double rf) {
  const Eigen::Index n = returns.size();
  if (n < 2) throw std::domain_error("sharpe: need at least 2 observations");
  double m = returns.mean();
  double sd = std::sqrt((returns.array() - m).square().sum() / double(n - 1));
  if (sd == 0.0) throw std::domain_error("sharpe: zero standard deviation");
  return (m - rf) / sd;
}

double sortino(const Eigen::VectorXd& returns, double target) {
  const Eigen::Index n = returns.size();
  if (n < 2) throw std::domain_error("sortino: need at least 2 observations");
  double m = returns.mean();
  double dd2 = (returns.array() - target).min(0.0).square().mean();
  if (dd2 == 0.0)
    throw std::domain_error("sortino: undefined, no observations below target");
  return (m - target) / std::sqrt(dd2);
}

double rachev(const Eigen::VectorXd& returns, double rf, double alpha_tail,
              double beta_tail) {
  const Eigen::Index n = returns.size();
  if (n < 1) throw std::domain_error("rachev: empty input");
  if (!(alpha_tail > 0.0 && alpha_tail <= 1.0 && beta_tail > 0.0 && beta_tail <= 1.0))
    throw std::domain_error("rachev: tail levels outside (0,1]");
  std::vector<double> excess(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) excess[size_t(i)] = returns[i] - rf;
  std::sort(excess.begin(), excess.end());
  Eigen::Index ka = std::min<Eigen::Index>(Eigen::Index(std::ceil(alpha_tail * double(n))), n);
  Eigen::Index kb = std::min<Eigen::Index>(Eigen::Index(std::ceil(beta_tail * double(n))), n);
  if (ka < 1 || kb < 1) throw std::domain_error("rachev: empty tail");
  double gain = 0.0;
  for (Eigen::Index i = n - ka; i < n; ++i) gain += excess[size_t(i)];
  gain /= double(ka);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < kb; ++i) loss += excess[size_t(i)];
  loss = -loss / double(kb);
  if (loss == 0.0) throw std::domain_error("rachev: zero denominator");
  return gain / loss;
}

}  // namespace envmarket
