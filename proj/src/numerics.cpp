#include "envmarket/numerics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace envmarket::num {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Lentz continued fraction for the incomplete beta function.
double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = std::numeric_limits<double>::epsilon();
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_ppf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_ppf: p outside (0,1)");
  // Acklam's rational approximation, then one Halley refinement.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double e = norm_cdf(x) - p;
  double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_pvalue(double t, double df) {
  double x = df / (df + t * t);
  return incomplete_beta(0.5 * df, 0.5, x);
}

double chi2_sf(double x, double df) { return gamma_q(0.5 * df, 0.5 * x); }

double log_bessel_k1(double x) {
  if (x <= 0.0) throw std::domain_error("log_bessel_k1: x must be positive");
  if (x < 600.0) return std::log(std::cyl_bessel_k(1.0, x));
  // Asymptotic expansion K_1(x) ~ sqrt(pi/2x) e^{-x} (1 + 3/8x - 15/128x^2 + ...)
  double ix = 1.0 / x;
  double series = 1.0 + 0.375 * ix - 0.1171875 * ix * ix +
                  0.1025390625 * ix * ix * ix;
  return 0.5 * std::log(kPi / (2.0 * x)) - x + std::log(series);
}

double brent_root(const std::function<double(double)>& f, double lo, double hi,
                  double xtol, double ftol, int max_iter) {
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw std::runtime_error("brent_root: no sign change on bracket");
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) + 0.5 * xtol;
    double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0 || std::fabs(fb) <= ftol) return b;
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      double s = fb / fa, p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol1 * q), std::fabs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::fabs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
  }
  return b;
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double rel_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double h = rel_step * std::max(1.0, std::fabs(x[i]));
    xp[i] = x[i] + h;
    double fp = f(xp);
    xp[i] = x[i] - h;
    double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                           double step, int max_iter, double ftol) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    pts[i + 1][i] += step * std::max(1.0, std::fabs(x0[i]));
  for (Eigen::Index i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  auto order = [&] {
    for (size_t i = 1; i < pts.size(); ++i) {
      auto p = pts[i];
      double v = vals[i];
      size_t j = i;
      while (j > 0 && vals[j - 1] > v) {
        pts[j] = pts[j - 1];
        vals[j] = vals[j - 1];
        --j;
      }
      pts[j] = p;
      vals[j] = v;
    }
  };
  order();

  MinimizeResult res;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    if (std::fabs(vals[n] - vals[0]) <=
        ftol * (std::fabs(vals[0]) + std::fabs(vals[n]) + 1e-300)) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += pts[i];
    centroid /= double(n);
    Eigen::VectorXd xr = centroid + (centroid - pts[n]);
    double fr = f(xr);
    if (fr < vals[0]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[n]);
      double fe = f(xe);
      if (fe < fr) { pts[n] = xe; vals[n] = fe; }
      else { pts[n] = xr; vals[n] = fr; }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      Eigen::VectorXd xc = centroid + 0.5 * (pts[n] - centroid);
      double fc = f(xc);
      if (fc < vals[n]) { pts[n] = xc; vals[n] = fc; }
      else {
        for (Eigen::Index i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          vals[i] = f(pts[i]);
        }
      }
    }
    order();
  }
  res.x = pts[0];
  res.fval = vals[0];
  res.iterations = iter;
  return res;
}

MinimizeResult bfgs(const Objective& f, const Eigen::VectorXd& x0, int max_iter,
                    double gtol) {
  const Eigen::Index n = x0.size();
  Eigen::VectorXd x = x0;
  double fx = f(x);
  Eigen::VectorXd g = fd_gradient(f, x);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  MinimizeResult res;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < gtol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd p = -H * g;
    if (p.dot(g) >= 0.0) {  // reset on loss of descent direction
      H.setIdentity();
      p = -g;
    }
    double alpha = 1.0;
    double gdp = g.dot(p);
    double fnew = fx;
    Eigen::VectorXd xnew = x;
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      xnew = x + alpha * p;
      fnew = f(xnew);
      if (std::isfinite(fnew) && fnew <= fx + 1e-4 * alpha * gdp) {
        ok = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!ok) break;
    Eigen::VectorXd gnew = fd_gradient(f, xnew);
    Eigen::VectorXd s = xnew - x;
    Eigen::VectorXd y = gnew - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      double rho = 1.0 / sy;
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    if (std::fabs(fx - fnew) < 1e-15 * (std::fabs(fx) + 1.0) &&
        s.norm() < 1e-14 * (x.norm() + 1.0)) {
      x = xnew; fx = fnew; g = gnew;
      res.converged = true;
      break;
    }
    x = xnew;
    fx = fnew;
    g = gnew;
  }
  res.x = x;
  res.fval = fx;
  res.iterations = iter;
  return res;
}

MinimizeResult newton_polish(const Objective& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, int max_iter,
                             double gtol) {
  const Eigen::Index n = x0.size();
  const bool bounded = lower.size() == n && upper.size() == n;
  Eigen::VectorXd x = x0;
  double fx = f(x);
  MinimizeResult res;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    Eigen::VectorXd g = fd_gradient(f, x, 1e-6);
    if (g.lpNorm<Eigen::Infinity>() < gtol) {
      res.converged = true;
      break;
    }
    // Finite-difference Hessian (symmetrized forward differences of gradient).
    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      double h = 1e-5 * std::max(1.0, std::fabs(x[i]));
      xp[i] = x[i] + h;
      Eigen::VectorXd gp = fd_gradient(f, xp, 1e-6);
      xp[i] = x[i] - h;
      Eigen::VectorXd gm = fd_gradient(f, xp, 1e-6);
      xp[i] = x[i];
      H.col(i) = (gp - gm) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();
    double lambda = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::MatrixXd Hd = H + lambda * Eigen::MatrixXd::Identity(n, n);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
      Eigen::VectorXd step = -ldlt.solve(g);
      if (!step.allFinite()) {
        lambda = lambda == 0.0 ? 1e-6 * (1.0 + H.diagonal().cwiseAbs().maxCoeff()) : lambda * 10.0;
        continue;
      }
      Eigen::VectorXd xn = x + step;
      if (bounded)
        for (Eigen::Index i = 0; i < n; ++i)
          xn[i] = std::min(std::max(xn[i], lower[i]), upper[i]);
      double fn = f(xn);
      if (std::isfinite(fn) && fn <= fx) {
        x = xn;
        fx = fn;
        accepted = true;
      } else {
        lambda = lambda == 0.0 ? 1e-6 * (1.0 + H.diagonal().cwiseAbs().maxCoeff()) : lambda * 10.0;
      }
    }
    if (!accepted) break;
  }
  res.x = x;
  res.fval = fx;
  res.iterations = iter;
  return res;
}

}  // namespace envmarket::num
