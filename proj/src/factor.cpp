#include "envmarket/factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "envmarket/numerics.hpp"
#include "envmarket/rng.hpp"

namespace envmarket {

namespace {

constexpr double kUniquenessFloor = 0.005;
constexpr int kRestarts = 10;
constexpr int kMaxEmIter = 5000;

// Gaussian log-likelihood of the sample matrix S under Sigma = BB' + D,
// n observations, including constants.
double gauss_loglik(const Eigen::MatrixXd& S, const Eigen::MatrixXd& B,
                    const Eigen::VectorXd& d, int n) {
  const Eigen::Index L = S.rows();
  Eigen::MatrixXd sigma = B * B.transpose();
  sigma.diagonal() += d;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < L; ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  double trace = llt.solve(S).trace();
  return -0.5 * double(n) *
         (double(L) * std::log(2.0 * std::acos(-1.0)) + logdet + trace);
}

struct EmFit {
  Eigen::MatrixXd B;
  Eigen::VectorXd d;
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
};

EmFit run_em(const Eigen::MatrixXd& S, Eigen::MatrixXd B, Eigen::VectorXd d,
             int n) {
  const Eigen::Index L = S.rows();
  const Eigen::Index m = B.cols();
  EmFit fit;
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kMaxEmIter; ++iter) {
    Eigen::MatrixXd sigma = B * B.transpose();
    sigma.diagonal() += d;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) break;
    Eigen::MatrixXd delta = llt.solve(B).transpose();        // m x L
    Eigen::MatrixXd dS = delta * S;                           // m x L
    Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(m, m) - delta * B +
                          dS * delta.transpose();             // m x m
    Eigen::MatrixXd B_new = dS.transpose() * cap.inverse();   // L x m
    Eigen::VectorXd d_new = (S - B_new * dS).diagonal().cwiseMax(kUniquenessFloor);
    B = B_new;
    d = d_new;
    double ll = gauss_loglik(S, B, d, n);
    if (std::isfinite(ll) && std::fabs(ll - prev) < 1e-9 * (1.0 + std::fabs(ll))) {
      fit.converged = true;
      prev = ll;
      break;
    }
    prev = ll;
  }
  (void)L;
  fit.B = B;
  fit.d = d;
  fit.loglik = prev;
  return fit;
}

}  // namespace

Eigen::MatrixXd FactorModel::fitted_covariance() const {
  Eigen::MatrixXd sigma = loadings * loadings.transpose();
  sigma.diagonal() += uniquenesses;
  return sigma;
}

FactorModel ml_factor_fit(const Eigen::MatrixXd& returns, int m,
                          const std::vector<std::string>& countries,
                          bool use_correlation) {
  const Eigen::Index n = returns.rows(), L = returns.cols();
  if (m < 1) throw std::domain_error("ml_factor_fit: m must be >= 1");
  if (!(n > L && L > m))
    throw std::domain_error("ml_factor_fit: need n > L > m");
  double df_check = (double(L - m) * double(L - m) - double(L) - double(m)) / 2.0;
  if (df_check < 0.0)
    throw std::domain_error("ml_factor_fit: negative degrees of freedom");
  if (!returns.allFinite())
    throw std::domain_error("ml_factor_fit: non-finite input");
  if (!countries.empty() && Eigen::Index(countries.size()) != L)
    throw std::domain_error("ml_factor_fit: country list length mismatch");

  FactorModel model;
  model.m = m;
  model.correlation_mode = use_correlation;
  model.countries = countries;
  if (model.countries.empty())
    for (Eigen::Index j = 0; j < L; ++j)
      model.countries.push_back("v" + std::to_string(j));

  model.column_means = returns.colwise().mean();
  Eigen::MatrixXd centered = returns.rowwise() - model.column_means.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
  model.column_sds = cov.diagonal().cwiseSqrt();
  for (Eigen::Index j = 0; j < L; ++j)
    if (!(model.column_sds[j] > 0.0))
      throw std::domain_error("ml_factor_fit: constant column");
  Eigen::MatrixXd S = cov;
  if (use_correlation) {
    Eigen::VectorXd inv_sd = model.column_sds.cwiseInverse();
    S = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
    S.diagonal().setOnes();
  }

  // Principal-axis start, then randomized perturbations.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  Eigen::MatrixXd B0(L, m);
  for (int j = 0; j < m; ++j) {
    Eigen::Index k = L - 1 - j;  // eigenvalues ascending
    B0.col(j) = es.eigenvectors().col(k) *
                std::sqrt(std::max(es.eigenvalues()[k], 1e-8));
  }

  EmFit best;
  int best_restart = -1;
  for (int r = 0; r < kRestarts; ++r) {
    Eigen::MatrixXd B = B0;
    if (r > 0) {
      Rng rng(0x9e3779b97f4a7c15ull, std::uint64_t(r));
      for (Eigen::Index i = 0; i < L; ++i)
        for (int j = 0; j < m; ++j)
          B(i, j) += 0.3 * rng.next_normal();
    }
    Eigen::VectorXd d = (S - B * B.transpose()).diagonal().cwiseMax(kUniquenessFloor);
    EmFit fit = run_em(S, B, d, int(n));
    if (fit.loglik > best.loglik) {
      best = fit;
      best_restart = r;
    }
  }
  if (best_restart < 0 || !std::isfinite(best.loglik))
    throw std::runtime_error("ml_factor_fit: all restarts failed");

  model.loadings = best.B;
  model.uniquenesses = best.d;
  model.log_likelihood = best.loglik;
  if (use_correlation) {
    // At the exact optimum the implied diagonal is one; snap the leftover
    // EM slack so communality + uniqueness is an identity, not approximate.
    for (Eigen::Index j = 0; j < L; ++j)
      model.uniquenesses[j] = std::max(
          kUniquenessFloor, 1.0 - model.loadings.row(j).squaredNorm());
    model.log_likelihood =
        gauss_loglik(S, model.loadings, model.uniquenesses, int(n));
  }
  model.converged = best.converged;
  model.heywood.assign(size_t(L), false);
  for (Eigen::Index j = 0; j < L; ++j)
    if (model.uniquenesses[j] <= kUniquenessFloor + 1e-12)
      model.heywood[size_t(j)] = true;

  // Likelihood-ratio adequacy test against the saturated model, Bartlett
  // correction (n - 1 - (2L + 5)/6 - 2m/3).
  Eigen::MatrixXd sigma = model.fitted_covariance();
  Eigen::LLT<Eigen::MatrixXd> lf(sigma);
  Eigen::LLT<Eigen::MatrixXd> ls((S + S.transpose()) / 2.0 +
                                 1e-14 * Eigen::MatrixXd::Identity(L, L));
  double logdet_f = 0.0, logdet_s = 0.0;
  for (Eigen::Index i = 0; i < L; ++i) {
    logdet_f += 2.0 * std::log(lf.matrixL()(i, i));
    logdet_s += 2.0 * std::log(ls.matrixL()(i, i));
  }
  double fmin = logdet_f - logdet_s + lf.solve(S).trace() - double(L);
  double correction = double(n) - 1.0 - (2.0 * double(L) + 5.0) / 6.0 -
                      2.0 * double(m) / 3.0;
  model.lr_statistic = std::max(0.0, correction * fmin);
  model.lr_df = int(df_check);
  model.lr_pvalue =
      model.lr_df > 0 ? num::chi2_sf(model.lr_statistic, double(model.lr_df)) : 1.0;
  return model;
}

std::vector<std::string> order_by_uniqueness(const FactorModel& model) {
  std::vector<size_t> idx(model.countries.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    double ua = model.uniquenesses[Eigen::Index(a)];
    double ub = model.uniquenesses[Eigen::Index(b)];
    if (ua != ub) return ua > ub;
    return model.countries[a] < model.countries[b];
  });
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(model.countries[i]);
  return out;
}

Eigen::MatrixXd factor_scores(const FactorModel& model,
                              const Eigen::MatrixXd& returns) {
  const Eigen::Index L = model.loadings.rows();
  if (returns.cols() != L)
    throw std::domain_error("factor_scores: column count mismatch");
  Eigen::MatrixXd centered = returns.rowwise() - model.column_means.transpose();
  if (model.correlation_mode)
    centered = centered * model.column_sds.cwiseInverse().asDiagonal();
  Eigen::MatrixXd sigma = model.fitted_covariance();
  // f_hat = B' Sigma^{-1} (r - mu); rows are observations.
  Eigen::MatrixXd weights = sigma.llt().solve(model.loadings);  // L x m
  return centered * weights;
}

Eigen::MatrixXd varimax(const Eigen::MatrixXd& loadings, int max_iter, double tol) {
  const Eigen::Index L = loadings.rows();
  const Eigen::Index m = loadings.cols();
  if (m < 2) return loadings;
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(m, m);
  double prev = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::MatrixXd lam = loadings * R;
    Eigen::MatrixXd u = lam.array().cube().matrix() -
                        lam * (lam.array().square().colwise().sum() / double(L))
                                  .matrix()
                                  .asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(loadings.transpose() * u,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    R = svd.matrixU() * svd.matrixV().transpose();
    double s = svd.singularValues().sum();
    if (std::fabs(s - prev) < tol) break;
    prev = s;
  }
  return loadings * R;
}

}  // namespace envmarket
