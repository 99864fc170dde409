#include "envmarket/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "envmarket/rng.hpp"

namespace envmarket {

Eigen::MatrixXd nearest_psd_correlation(const Eigen::MatrixXd& m, bool* projected) {
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  bool needed = es.eigenvalues().minCoeff() < -1e-12;
  if (projected) *projected = needed;
  if (!needed) {
    Eigen::MatrixXd out = sym;
    out.diagonal().setOnes();
    return out;
  }
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-12);
  Eigen::MatrixXd out =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  // Rescale to unit diagonal.
  Eigen::VectorXd d = out.diagonal().cwiseSqrt().cwiseInverse();
  out = d.asDiagonal() * out * d.asDiagonal();
  out = 0.5 * (out + out.transpose()).eval();
  out.diagonal().setOnes();
  return out;
}

Eigen::VectorXd MvNigSpec::draw(Rng& rng) const {
  const Eigen::Index L = dimension();
  Eigen::LLT<Eigen::MatrixXd> llt(mixing_correlation +
                                  1e-12 * Eigen::MatrixXd::Identity(L, L));
  double w = rng.next_inverse_gaussian(1.0, shared_shape);
  Eigen::VectorXd z(L);
  for (Eigen::Index i = 0; i < L; ++i) z[i] = rng.next_normal();
  Eigen::VectorXd n = llt.matrixL() * z;
  Eigen::VectorXd x(L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const NigParams& p = marginals[size_t(l)];
    double eta = p.subordinator_mean();
    x[l] = p.mu + p.beta * eta * w + std::sqrt(eta * w) * n[l];
  }
  return x;
}

double MvNigSpec::column_mean(Eigen::Index l) const {
  const NigParams& p = marginals[size_t(l)];
  return p.mu + p.beta * p.subordinator_mean();
}

double MvNigSpec::column_variance(Eigen::Index l) const {
  const NigParams& p = marginals[size_t(l)];
  double eta = p.subordinator_mean();
  return p.beta * p.beta * eta * eta / shared_shape + eta;
}

MvNigSpec fit_mvnig(const Eigen::MatrixXd& residuals) {
  const Eigen::Index n = residuals.rows(), L = residuals.cols();
  if (n < L) throw std::domain_error("fit_mvnig: need at least L rows");
  if (!residuals.allFinite()) throw std::domain_error("fit_mvnig: non-finite input");
  MvNigSpec spec;
  double shape_sum = 0.0;
  for (Eigen::Index l = 0; l < L; ++l) {
    NigParams p = fit_nig(residuals.col(l));
    shape_sum += p.delta * p.gamma_bar();
    spec.marginals.push_back(p);
  }
  spec.shared_shape = shape_sum / double(L);

  Eigen::MatrixXd centered = residuals.rowwise() - residuals.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
  Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < L; ++i)
    if (!(sd[i] > 0.0)) throw std::domain_error("fit_mvnig: constant column");
  Eigen::MatrixXd corr =
      sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  spec.mixing_correlation = nearest_psd_correlation(corr, &spec.psd_projected);
  return spec;
}

ScenarioMatrix sample_scenarios(const MvNigSpec& spec,
                                const std::vector<FittedModel>& models,
                                const std::vector<std::string>& countries,
                                Eigen::Index scenario_count, std::uint64_t seed) {
  const Eigen::Index L = spec.dimension();
  if (scenario_count < 1) throw std::domain_error("sample_scenarios: S must be >= 1");
  if (Eigen::Index(models.size()) != L || Eigen::Index(countries.size()) != L)
    throw std::domain_error("sample_scenarios: dimension mismatch");

  Eigen::LLT<Eigen::MatrixXd> llt(spec.mixing_correlation +
                                  1e-12 * Eigen::MatrixXd::Identity(L, L));
  Eigen::MatrixXd chol = llt.matrixL();
  Eigen::VectorXd cond_mean(L), cond_sd(L);
  for (Eigen::Index l = 0; l < L; ++l) {
    cond_mean[l] = models[size_t(l)].one_step_mean();
    cond_sd[l] = std::sqrt(models[size_t(l)].one_step_variance());
  }

  ScenarioMatrix out;
  out.countries = countries;
  out.measure = Measure::real_world;
  out.seed = seed;
  out.returns.resize(scenario_count, L);
  for (Eigen::Index s = 0; s < scenario_count; ++s) {
    Rng rng(seed, std::uint64_t(s));  // one substream per scenario
    double w = rng.next_inverse_gaussian(1.0, spec.shared_shape);
    Eigen::VectorXd z(L);
    for (Eigen::Index i = 0; i < L; ++i) z[i] = rng.next_normal();
    Eigen::VectorXd n = chol * z;
    for (Eigen::Index l = 0; l < L; ++l) {
      const NigParams& p = spec.marginals[size_t(l)];
      double eta = p.subordinator_mean();
      double eps = p.mu + p.beta * eta * w + std::sqrt(eta * w) * n[l];
      out.returns(s, l) = cond_mean[l] + cond_sd[l] * eps;
    }
  }
  return out;
}

Eigen::MatrixXd forward_levels(const Eigen::VectorXd& last_levels,
                               const ScenarioMatrix& scenarios,
                               const TransformParams& p) {
  const Eigen::Index S = scenarios.returns.rows(), L = scenarios.returns.cols();
  if (last_levels.size() != L)
    throw std::domain_error("forward_levels: level count mismatch");
  Eigen::MatrixXd out(S, L);
  for (Eigen::Index l = 0; l < L; ++l) {
    double f0 = p.apply(last_levels[l]);
    for (Eigen::Index s = 0; s < S; ++s)
      out(s, l) = p.invert(f0 * std::exp(scenarios.returns(s, l)));
  }
  return out;
}

}  // namespace envmarket
