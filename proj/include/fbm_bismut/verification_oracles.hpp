#pragma once

// Slow, independent reference implementations used to validate the main modules.
// Nothing here reuses the product-integration weights or the Euler steppers.

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "fbm_bismut/bismut_weights.hpp"
#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/fbm_operators.hpp"
#include "fbm_bismut/model.hpp"
#include "fbm_bismut/monte_carlo.hpp"
#include "fbm_bismut/special_functions.hpp"

namespace fbm_bismut {

enum class OracleMethod { Quad, FdCrn, Closed, Steps };

inline const char* oracle_tag(OracleMethod m) {
  switch (m) {
    case OracleMethod::Quad: return "QUAD";
    case OracleMethod::FdCrn: return "FD-CRN";
    case OracleMethod::Closed: return "CLOSED";
    case OracleMethod::Steps: return "STEPS";
  }
  return "?";
}

struct OracleResult {
  double value = 0.0;
  double error = 0.0;
  OracleMethod method = OracleMethod::Quad;
  double std_error = 0.0;  // Monte Carlo part of `error`, when applicable
};

// tanh-sinh on [a,b]; throws when the error estimate stays above tol.
inline OracleResult adaptive_integral(const std::function<double(double)>& f, double a, double b,
                                      double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("adaptive_integral: tol must be positive");
  if (a == b) return {0.0, 0.0, OracleMethod::Quad};
  boost::math::quadrature::tanh_sinh<double> integrator(18);
  double err = 0.0, l1 = 0.0;
  double v = integrator.integrate(f, a, b, tol * 1e-2, &err, &l1);
  if (!std::isfinite(v)) throw InvalidArgument("adaptive_integral: non-finite result");
  if (err > tol) throw InvalidArgument("adaptive_integral: refinement limit reached");
  return {v, err, OracleMethod::Quad};
}

// I^alpha f(x) = Gamma(alpha)^-1 int_0^x (x-y)^(alpha-1) f(y) dy. The substitution
// u = (x-y)^alpha removes the endpoint singularity: (1/alpha) int_0^(x^alpha) f(x - u^(1/alpha)) du.
inline OracleResult quad_frac_integral(const std::function<double(double)>& f, double alpha, double x,
                                       double tol) {
  if (!(alpha > 0.0)) throw InvalidArgument("quad_frac_integral: alpha must be positive");
  if (x < 0.0) throw InvalidArgument("quad_frac_integral: x must be nonnegative");
  if (x == 0.0) return {0.0, 0.0, OracleMethod::Quad};
  double top = std::pow(x, alpha);
  auto g = [&](double u) { return f(x - std::pow(u, 1.0 / alpha)); };
  OracleResult r = adaptive_integral(g, 0.0, top, tol * alpha * std::tgamma(alpha));
  double scale = 1.0 / (alpha * std::tgamma(alpha));
  return {r.value * scale, r.error * scale, OracleMethod::Quad};
}

// Unnormalized-free check of the kernel: int_0^min(t,s) K(t,r)K(s,r) dr by tanh-sinh.
inline OracleResult quad_kernel_product(Hurst hurst, double t, double s, double tol = 1e-9) {
  KernelEvaluator k(hurst);
  double m = std::min(t, s);
  auto f = [&](double r) {
    if (r <= 0.0 || r >= m) return 0.0;
    return k(t, r) * k(s, r);
  };
  return adaptive_integral(f, 0.0, m, tol);
}

// ---------------------------------------------------------------------------
// Closed forms

// exp(A T) x by Pade scaling and squaring.
inline Vec linear_model_flow(const Mat& a, const Vec& x, double horizon) {
  if (a.rows() != a.cols() || a.rows() != x.size())
    throw InvalidArgument("linear_model_flow: dimension mismatch");
  Eigen::MatrixXd at = Eigen::MatrixXd(a) * horizon;
  Eigen::MatrixXd e = at.exp();
  return Vec(e * Eigen::VectorXd(x));
}

// ---------------------------------------------------------------------------
// Finite differences with common random numbers

struct FdOptions {
  int intervals = 256;
  McOptions mc;
};

namespace detail {

// Independent Euler loop (kept separate from the solver under test).
inline Vec oracle_euler(const ModelSpec& m, const std::vector<Mat>& sig, const Eigen::MatrixXd& bh,
                        double h, Vec x) {
  for (Eigen::Index k = 0; k + 1 < bh.rows(); ++k) {
    Vec db = (bh.row(k + 1) - bh.row(k)).transpose();
    Vec drift = m.drift.value(x);
    x = x + h * drift + sig[static_cast<std::size_t>(k)] * db;
  }
  return x;
}

}  // namespace detail

// (P f(x + s v) - P f(x - s v)) / 2s on shared noise; the curvature proxy compares
// with step 2s: the O(s^2) error of the central difference is |D(2s) - D(s)| / 3.
inline OracleResult fd_gradient(const ModelSpec& model, const TestFunction& f, const Vec& x,
                                const Vec& v, double step, const FdOptions& opt) {
  if (!(step >= 1e-5 && step <= 1e-1)) throw InvalidArgument("fd_gradient: step must lie in [1e-5, 1e-1]");
  Grid g(0.0, model.horizon, opt.intervals);
  model.validate(g);
  VolterraSampler sampler(model.hurst, g);
  std::vector<Mat> sig;
  for (int k = 0; k < g.size(); ++k) sig.push_back(model.diffusion.sigma(g.node(k)));
  const double h = g.step();
  PathTable t = run_paths(opt.mc, 2, [&]() {
    return [&, dw = Eigen::MatrixXd(g.intervals(), model.dim), bh = Eigen::MatrixXd()](
               std::size_t, std::uint64_t seed, double* row) mutable {
      fill_wiener_increments(g, seed, dw);
      sampler.apply(dw, bh);
      double p1 = f.value(detail::oracle_euler(model, sig, bh, h, x + step * v));
      double m1 = f.value(detail::oracle_euler(model, sig, bh, h, x - step * v));
      double p2 = f.value(detail::oracle_euler(model, sig, bh, h, x + 2 * step * v));
      double m2 = f.value(detail::oracle_euler(model, sig, bh, h, x - 2 * step * v));
      row[0] = (p1 - m1) / (2 * step);
      row[1] = (p2 - m2) / (4 * step);
    };
  });
  SampleStats d1 = column_stats(t, 0), d2 = column_stats(t, 1);
  double proxy = std::abs(d2.mean - d1.mean) / 3.0;
  return {d1.mean, d1.std_error + proxy, OracleMethod::FdCrn, d1.std_error};
}

// Same comparator for functional equations: perturb the initial segment by +-s eta.
inline OracleResult fd_gradient_sfde(const FunctionalModelSpec& model, const TestFunction& f,
                                     const Eigen::MatrixXd& eta, double step, const FdOptions& opt) {
  if (!(step >= 1e-5 && step <= 1e-1)) throw InvalidArgument("fd_gradient_sfde: step must lie in [1e-5, 1e-1]");
  Grid pos(0.0, model.horizon, opt.intervals);
  const double h = pos.step();
  const int lag = static_cast<int>(std::nearbyint(model.delay / h));
  if (std::abs(lag * h - model.delay) > 1e-9) throw InvalidArgument("fd_gradient_sfde: r0 not on grid");
  Grid full(-model.delay, model.horizon, opt.intervals + lag);
  model.validate(full);
  if (eta.rows() != lag + 1 || eta.cols() != model.dim)
    throw InvalidArgument("fd_gradient_sfde: eta must be sampled on [-r0, 0]");
  VolterraSampler sampler(model.hurst, pos);
  std::vector<Mat> sig;
  for (int k = 0; k < pos.size(); ++k) sig.push_back(model.diffusion.sigma(pos.node(k)));
  Eigen::MatrixXd xi(lag + 1, model.dim);
  for (int k = 0; k <= lag; ++k) xi.row(k) = model.history(full.node(k)).transpose();

  auto terminal = [&](const Eigen::MatrixXd& bh, const Eigen::MatrixXd& init) {
    Eigen::MatrixXd z(opt.intervals + lag + 1, model.dim);
    z.topRows(lag + 1) = init;
    for (int k = 0; k < opt.intervals; ++k) {
      Eigen::MatrixXd seg = z.middleRows(k, lag + 1);
      Vec db = (bh.row(k + 1) - bh.row(k)).transpose();
      Vec next = z.row(lag + k).transpose() + h * model.drift.value(seg) + sig[k] * db;
      z.row(lag + k + 1) = next.transpose();
    }
    return Vec(z.row(z.rows() - 1).transpose());
  };

  PathTable t = run_paths(opt.mc, 2, [&]() {
    return [&, dw = Eigen::MatrixXd(opt.intervals, model.dim), bh = Eigen::MatrixXd()](
               std::size_t, std::uint64_t seed, double* row) mutable {
      fill_wiener_increments(pos, seed, dw);
      sampler.apply(dw, bh);
      double p1 = f.value(terminal(bh, xi + step * eta));
      double m1 = f.value(terminal(bh, xi - step * eta));
      double p2 = f.value(terminal(bh, xi + 2 * step * eta));
      double m2 = f.value(terminal(bh, xi - 2 * step * eta));
      row[0] = (p1 - m1) / (2 * step);
      row[1] = (p2 - m2) / (4 * step);
    };
  });
  SampleStats d1 = column_stats(t, 0), d2 = column_stats(t, 1);
  double proxy = std::abs(d2.mean - d1.mean) / 3.0;
  return {d1.mean, d1.std_error + proxy, OracleMethod::FdCrn, d1.std_error};
}

// ---------------------------------------------------------------------------
// Method of steps for z'(t) = F(z(t), z(t - r0)) with history on [-r0, 0]

struct DelayOde {
  int dim = 1;
  double delay = 1.0;
  std::function<Vec(const Vec&, const Vec&)> rhs;  // (z(t), z(t - r0))
  std::function<Vec(double)> history;
};

struct StepsSolution {
  double start = 0.0;
  double step = 0.0;
  std::vector<Vec> z;   // nodes start + k step
  std::vector<Vec> dz;  // derivative at the nodes

  // Cubic Hermite interpolation between nodes.
  Vec at(double t) const {
    double u = (t - start) / step;
    int k = static_cast<int>(std::floor(u));
    k = std::clamp(k, 0, static_cast<int>(z.size()) - 2);
    double s = u - k;
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * z[k] + h10 * step * dz[k] + h01 * z[k + 1] + h11 * step * dz[k + 1];
  }
};

// Integrates interval by interval [j r0, (j+1) r0] with RK4; delayed values come
// from the Hermite interpolant of the already-computed interval.
inline StepsSolution method_of_steps(const DelayOde& ode, double horizon, int steps_per_delay = 2000) {
  if (!(ode.delay > 0.0) || !(horizon > 0.0) || steps_per_delay < 4)
    throw InvalidArgument("method_of_steps: invalid arguments");
  StepsSolution sol;
  sol.start = -ode.delay;
  sol.step = ode.delay / steps_per_delay;
  const double h = sol.step;
  const double eps = 1e-7 * h;
  for (int k = 0; k <= steps_per_delay; ++k) {
    double t = -ode.delay + k * h;
    sol.z.push_back(ode.history(t));
    Vec fd = (ode.history(std::min(t + eps, 0.0)) - ode.history(std::max(t - eps, -ode.delay))) /
             (std::min(t + eps, 0.0) - std::max(t - eps, -ode.delay));
    sol.dz.push_back(fd);
  }
  int total = static_cast<int>(std::ceil(horizon / h - 1e-9));
  // The derivative jumps at t = 0, so lags inside the history read it directly.
  auto lagged = [&](double t) { return t <= ode.delay ? ode.history(t - ode.delay) : sol.at(t - ode.delay); };
  for (int k = 0; k < total; ++k) {
    double t = k * h;
    const Vec& y = sol.z.back();
    Vec k1 = ode.rhs(y, lagged(t));
    Vec k2 = ode.rhs(y + 0.5 * h * k1, lagged(t + 0.5 * h));
    Vec k3 = ode.rhs(y + 0.5 * h * k2, lagged(t + 0.5 * h));
    Vec k4 = ode.rhs(y + h * k3, lagged(t + h));
    Vec next = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    // The derivative at t_0 = 0 comes from the equation, not the history.
    if (k == 0) sol.dz.back() = k1;
    sol.z.push_back(next);
    sol.dz.push_back(ode.rhs(next, lagged(t + h)));
  }
  return sol;
}

inline OracleResult steps_value(const StepsSolution& s, double t, int component = 0) {
  return {s.at(t)[component], 0.0, OracleMethod::Steps};
}

}  // namespace fbm_bismut
