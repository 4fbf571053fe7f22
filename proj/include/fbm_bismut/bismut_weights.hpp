#pragma once

// Cameron-Martin directions, the integrand K_H^* h, the weight delta(h), and the
// Bismut gradient estimator  grad_v P_T f(x) = E[ f(X_T) delta(h) ].
//
// For the SDE the density of R_H h is rho(s) = sigma^-1(s) [ w(s) grad b(X(s)) v + v/T ],
// w(s) = (T-s)/T. Three evaluations of K_H^* h = K_H^-1(R_H h) are provided:
//   Generic  - fractional-calculus inverse applied to rho (any H);
//   Explicit - the five-term expansion I1..I5 (H > 1/2);
//   LowH     - the singular convolution t^(H-1/2) int r^(1/2-H) (t-r)^(-H-1/2) rho(r) dr (H < 1/2).

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/fbm_operators.hpp"
#include "fbm_bismut/fractional_calculus.hpp"
#include "fbm_bismut/grid.hpp"
#include "fbm_bismut/model.hpp"
#include "fbm_bismut/monte_carlo.hpp"
#include "fbm_bismut/quadrature.hpp"
#include "fbm_bismut/sde_engine.hpp"

namespace fbm_bismut {

enum class WeightRoute { Generic, Explicit, LowH };

inline const char* route_name(WeightRoute r) {
  switch (r) {
    case WeightRoute::Generic: return "generic";
    case WeightRoute::Explicit: return "explicit";
    case WeightRoute::LowH: return "low_h";
  }
  return "?";
}

// Cubic smoothstep: 1 on [-r0, 0], 1 - (3u^2 - 2u^3) with u = t/(T-r0) on [0, T-r0], 0 after.
class CutoffGamma {
 public:
  CutoffGamma(double r0, double horizon) : r0_(r0), horizon_(horizon) {
    if (!(r0 > 0.0) || !(horizon > r0)) throw InvalidArgument("CutoffGamma: need 0 < r0 < T");
  }
  double r0() const { return r0_; }
  double horizon() const { return horizon_; }
  double span() const { return horizon_ - r0_; }

  double value(double t) const {
    if (t <= 0.0) return 1.0;
    if (t >= span()) return 0.0;
    double u = t / span();
    return 1.0 - u * u * (3.0 - 2.0 * u);
  }
  double derivative(double t) const {
    if (t <= 0.0 || t >= span()) return 0.0;
    double u = t / span();
    return -6.0 * u * (1.0 - u) / span();
  }

 private:
  double r0_;
  double horizon_;
};

struct WeightPlan {
  Grid grid;  // [0, T]
  SolutionPath path;
  std::optional<ModelSpec> model;
  std::optional<FunctionalModelSpec> functional;
  Vec v;                          // SDE direction
  Eigen::MatrixXd eta;            // functional direction on [-r0, 0]
  std::optional<CutoffGamma> gamma;

  const WienerPath& wiener() const {
    if (!path.noise.wiener)
      throw InvalidArgument("WeightPlan: the driving noise must come from the VOLTERRA sampler");
    return *path.noise.wiener;
  }
};

inline WeightPlan make_weight_plan(const ModelSpec& model, const SolutionPath& path, const Vec& v) {
  if (v.size() != model.dim) throw InvalidArgument("make_weight_plan: direction dimension mismatch");
  if (path.noise.provenance != Provenance::Volterra || !path.noise.wiener)
    throw InvalidArgument("make_weight_plan: path must be driven by a VOLTERRA sample");
  return WeightPlan{path.grid, path, model, std::nullopt, v, {}, std::nullopt};
}

// Gamma(t) = [eta(t) 1_{t<=0} + eta(0) 1_{t>0}] gamma(t) on the full grid [-r0, T].
inline Eigen::MatrixXd cutoff_direction(const CutoffGamma& gamma, const Eigen::MatrixXd& eta,
                                        const Grid& full) {
  const int lag = static_cast<int>(eta.rows()) - 1;
  Eigen::MatrixXd g(full.size(), eta.cols());
  for (int k = 0; k < full.size(); ++k) {
    if (k <= lag)
      g.row(k) = eta.row(k);
    else
      g.row(k) = eta.row(lag) * gamma.value(full.node(k));
  }
  return g;
}

inline WeightPlan build_sfde_plan(const FunctionalModelSpec& model, const Eigen::MatrixXd& eta,
                                  const CutoffGamma& gamma, const SolutionPath& path) {
  if (std::abs(gamma.r0() - model.delay) > 1e-12 || std::abs(gamma.horizon() - model.horizon) > 1e-12)
    throw InvalidArgument("build_sfde_plan: cutoff must match the model's r0 and T");
  if (gamma.value(gamma.span()) != 0.0 || gamma.value(0.0) != 1.0)
    throw InvalidArgument("build_sfde_plan: cutoff violates its boundary conditions");
  if (path.noise.provenance != Provenance::Volterra || !path.noise.wiener)
    throw InvalidArgument("build_sfde_plan: path must be driven by a VOLTERRA sample");
  if (eta.rows() != path.origin + 1 || eta.cols() != model.dim)
    throw InvalidArgument("build_sfde_plan: eta must be sampled on [-r0, 0]");
  return WeightPlan{path.noise.grid, path, std::nullopt, model, Vec(), eta, gamma};
}

namespace detail {

// rho_k for the SDE plan; rows are nodes of [0,T].
inline void sde_density(const ModelSpec& m, const DiffusionTable& tab, const Grid& g,
                        const Eigen::MatrixXd& x, const Vec& v, Eigen::MatrixXd& rho) {
  const int n = g.intervals();
  const double T = g.end();
  rho.resize(n + 1, m.dim);
  for (int k = 0; k <= n; ++k) {
    double w = (T - g.node(k)) / T;
    Vec inner = v / T;
    if (!m.drift.zero) inner += w * (m.drift.gradient(x.row(k).transpose()) * v);
    rho.row(k) = (tab.identity ? inner : Vec(tab.sigma_inv[k] * inner)).transpose();
  }
}

// rho_k for the functional plan. gamma' is replaced by its one-step difference so the
// discrete flows cancel exactly at T, mirroring the continuous identity.
inline void sfde_density(const FunctionalModelSpec& m, const DiffusionTable& tab,
                         const CutoffGamma& gamma, const Grid& full, int lag,
                         const Eigen::MatrixXd& x, const Eigen::MatrixXd& eta, Eigen::MatrixXd& rho) {
  const int n = full.intervals() - lag;
  const double h = full.step();
  Eigen::MatrixXd dir = cutoff_direction(gamma, eta, full);
  Vec eta0 = eta.row(lag).transpose();
  rho.resize(n + 1, m.dim);
  for (int k = 0; k <= n; ++k) {
    int row = lag + k;
    double t = full.node(row);
    double dgamma = k < n ? (gamma.value(t + h) - gamma.value(t)) / h : gamma.derivative(t);
    Vec inner = -dgamma * eta0;
    if (!m.drift.zero)
      inner += m.drift.directional(x.middleRows(row - lag, lag + 1), dir.middleRows(row - lag, lag + 1));
    rho.row(k) = (tab.identity ? inner : Vec(tab.sigma_inv[k] * inner)).transpose();
  }
}

// Packed lower-triangular table: row k in 1..n holds k cells.
struct TriangularTable {
  std::vector<double> left, right;
  std::vector<std::size_t> offset;

  explicit TriangularTable(int n) : offset(n + 2, 0) {
    for (int k = 1; k <= n + 1; ++k) offset[k] = offset[k - 1] + (k > 1 ? k - 1 : 0);
    left.assign(offset[n + 1] + n + 1, 0.0);
    right.assign(left.size(), 0.0);
  }
  std::size_t at(int k, int i) const { return offset[k] + i; }
};

// Moments of a weight omega(theta, 1-theta) against the hats of theta-cell [i/k, (i+1)/k].
template <class Weight>
void theta_moments(int k, int i, double p_start, double p_end, const Rule01& rule,
                   const Weight& omega, double& left, double& right) {
  const double a = static_cast<double>(i) / k;
  const double b = static_cast<double>(i + 1) / k;
  const double half = 0.5 * (b - a);
  left = right = 0.0;
  for (int side = 0; side < 2; ++side) {
    const bool grade_start = side == 0 && i == 0;
    const bool grade_end = side == 1 && i == k - 1;
    const double pa = side == 0 ? a : a + half;
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      double u = rule.x[q];
      double theta, om, da, db, wt;
      if (grade_start) {
        da = half * std::pow(u, p_start);
        theta = a + da;
        db = (b - a) - da;
        om = 1.0 - theta;
        wt = half * p_start * std::pow(u, p_start - 1.0) * rule.w[q];
      } else if (grade_end) {
        db = half * std::pow(u, p_end);
        theta = b - db;
        om = (1.0 - b) + db;
        da = (b - a) - db;
        wt = half * p_end * std::pow(u, p_end - 1.0) * rule.w[q];
      } else {
        theta = pa + half * u;
        da = theta - a;
        db = b - theta;
        om = 1.0 - theta;
        wt = half * rule.w[q];
      }
      double val = omega(theta, om) * wt;
      left += val * k * db;
      right += val * k * da;
    }
  }
}

}  // namespace detail

// Per-term L2 norms of the explicit expansion.
struct TermDiagnostics {
  std::array<double, 5> l2{0, 0, 0, 0, 0};
};

// Immutable data for one (H, grid, diffusion) triple, shared across workers.
class IntegrandTables {
 public:
  IntegrandTables(Hurst hurst, const Grid& grid, const DiffusionTable& diffusion, WeightRoute route)
      : hurst_(hurst), grid_(grid), route_(route), sqrt_v_(std::sqrt(kernel_variance_constant(hurst))) {
    const int n = grid.intervals();
    const double h = hurst.value();
    if (route == WeightRoute::Explicit) {
      if (hurst.regime() != Regime::High)
        throw InvalidArgument("explicit route requires H > 1/2");
      build_explicit(diffusion, n, h);
    } else if (route == WeightRoute::LowH) {
      if (hurst.regime() != Regime::Low) throw InvalidArgument("low-H route requires H < 1/2");
      if (!diffusion.identity) throw InvalidArgument("low-H route requires sigma = Id");
      build_low(n, h);
    }
  }

  Hurst hurst() const { return hurst_; }
  const Grid& grid() const { return grid_; }
  WeightRoute route() const { return route_; }

  // Five-term expansion. x: path rows on [0,T]; out: (n+1) x d.
  void explicit_integrand(const ModelSpec& m, const DiffusionTable& tab, const Eigen::MatrixXd& x,
                          const Vec& v, Eigen::MatrixXd& out, TermDiagnostics* diag) const {
    const int n = grid_.intervals(), d = m.dim;
    const double T = grid_.end(), a = alpha_;
    std::vector<Vec> beta(n + 1), psi(n + 1), f(n + 1);
    for (int k = 0; k <= n; ++k) {
      double w = (T - grid_.node(k)) / T;
      beta[k] = m.drift.zero ? Vec(Vec::Zero(d)) : Vec(m.drift.gradient(x.row(k).transpose()) * v);
      psi[k] = w * beta[k] + v / T;
      f[k] = tab.identity ? psi[k] : Vec(tab.sigma_inv[k] * psi[k]);
    }
    out.resize(n + 1, d);
    out.row(0) = (sqrt_v_ * origin_coef_ * f[0]).transpose();
    std::array<double, 5> acc{0, 0, 0, 0, 0};
    Vec g_prev(d), g_cur(d);
    for (int k = 1; k <= n; ++k) {
      const double tk = grid_.node(k);
      const double tma = std::pow(tk, -a);
      Vec i1 = tma * f[k];
      // I2: constant part in closed form, remainder by hat moments.
      Vec s2 = -c0_ * f[k];
      for (int i = 0; i < k; ++i) {
        std::size_t idx = w2_.at(k, i);
        s2 += w2_.left[idx] * (f[i] - f[k]);
        if (i < k - 1) s2 += w2_.right[idx] * (f[i + 1] - f[k]);
      }
      Vec i2 = a * tma * s2;
      Vec i3 = tab.identity ? Vec(Vec::Zero(d)) : Vec(a3_[k] * psi[k]);
      Vec i4 = -(a / T) * (tab.identity ? Vec(a4_[k](0, 0) * beta[k]) : Vec(a4_[k] * beta[k]));
      Vec i5 = Vec::Zero(d);
      if (!m.drift.zero) {
        auto gval = [&](int j) {
          double w = (T - grid_.node(j)) / T;
          Vec db = beta[k] - beta[j];
          return tab.identity ? Vec(w * db) : Vec(w * (tab.sigma_inv[j] * db));
        };
        g_prev = gval(0);
        for (int j = 0; j < k; ++j) {
          int lag = k - j;
          g_cur = j + 1 == k ? Vec(Vec::Zero(d)) : gval(j + 1);
          // Weyl lag weights applied to f_k - f(y) with f = -G and G_k = 0.
          i5 += weyl_a_[lag] * g_prev + weyl_b_[lag] * g_cur;
          g_prev = g_cur;
        }
      }
      Vec total = sqrt_v_ * inv_gamma_ * (i1 + i2 + i3 + i4 + i5);
      if (!total.allFinite() || total.cwiseAbs().maxCoeff() > kOverflowGuard)
        throw InsufficientRegularity("explicit integrand diverged at node " + std::to_string(k));
      out.row(k) = total.transpose();
      if (diag) {
        const double s = sqrt_v_ * inv_gamma_;
        double wq = grid_.step();
        acc[0] += wq * (s * i1).squaredNorm();
        acc[1] += wq * (s * i2).squaredNorm();
        acc[2] += wq * (s * i3).squaredNorm();
        acc[3] += wq * (s * i4).squaredNorm();
        acc[4] += wq * (s * i5).squaredNorm();
      }
    }
    if (diag)
      for (int t = 0; t < 5; ++t) diag->l2[t] = std::sqrt(acc[t]);
  }

  // rho: density rows on [0,T]; out: (n+1) x d.
  void low_h_integrand(const Eigen::MatrixXd& rho, Eigen::MatrixXd& out) const {
    const int n = grid_.intervals();
    out.resize(n + 1, rho.cols());
    out.row(0).setZero();
    for (int k = 1; k <= n; ++k) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(rho.cols());
      for (int i = 0; i < k; ++i) {
        std::size_t idx = wl_.at(k, i);
        acc += wl_.left[idx] * rho.row(i) + wl_.right[idx] * rho.row(i + 1);
      }
      out.row(k) = low_pref_[k] * acc;
    }
  }

  double c0() const { return c0_; }

 private:
  void build_explicit(const DiffusionTable& diffusion, int n, double h) {
    alpha_ = h - 0.5;
    const double a = alpha_;
    inv_gamma_ = 1.0 / gamma_fn(1.0 - a);
    c0_ = 1.0 / a - std::pow(gamma_fn(1.0 - a), 2) / (a * gamma_fn(1.0 - 2.0 * a));
    origin_coef_ = gamma_fn(1.0 - a) / gamma_fn(1.0 - 2.0 * a) * std::pow(grid_.step(), -a) / (1.0 - a);
    // Weyl lag weights without the 1/Gamma(1-alpha) factor: alpha int (f(t)-f(y)) (t-y)^(-alpha-1) dy.
    FracDerivativeWeights wd(a, grid_.step(), n);
    weyl_a_.assign(n + 1, 0.0);
    weyl_b_.assign(n + 1, 0.0);
    const double g = gamma_fn(1.0 - a);
    for (int m = 1; m <= n; ++m) {
      weyl_a_[m] = g * wd.lag_weight_a(m);
      weyl_b_[m] = g * wd.lag_weight_b(m);
    }
    const int d = static_cast<int>(diffusion.sigma_inv.front().rows());
    // A3_k = alpha int (a(t)-a(r)) (t-r)^(-alpha-1) dr, A4_k = int (t-r)^(-alpha) a(r) dr.
    FracIntegralWeights wi(1.0 - a, grid_.step(), n);
    a3_.assign(n + 1, Mat::Zero(d, d));
    a4_.assign(n + 1, Mat::Zero(d, d));
    std::vector<double> col(n + 1), res(n + 1);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        for (int k = 0; k <= n; ++k) col[k] = diffusion.sigma_inv[k](r, c);
        wi.apply(col.data(), res.data(), n);
        for (int k = 0; k <= n; ++k) a4_[k](r, c) = g * res[k];
        for (int k = 1; k <= n; ++k) {
          double acc = 0.0;
          for (int j = 0; j < k; ++j) {
            int m = k - j;
            acc += weyl_a_[m] * (col[k] - col[j]) + weyl_b_[m] * (col[k] - col[j + 1]);
          }
          a3_[k](r, c) = acc;
        }
      }
    // theta-moments of omega2 = (1 - theta^-alpha)(1 - theta)^(-alpha-1).
    w2_ = detail::TriangularTable(n);
    const Rule01& rule = gauss_legendre01(10);
    const double p = std::ceil(4.0 / (1.0 - a));
    auto omega2 = [a](double theta, double om) {
      double lt = om < 0.5 ? std::log1p(-om) : std::log(theta);
      return -std::expm1(-a * lt) * std::pow(om, -a - 1.0);
    };
    for (int k = 1; k <= n; ++k)
      for (int i = 0; i < k; ++i) {
        double l, r;
        detail::theta_moments(k, i, p, p, rule, omega2, l, r);
        std::size_t idx = w2_.at(k, i);
        w2_.left[idx] = l;
        w2_.right[idx] = r;
      }
  }

  // omega = theta^b (1-theta)^-c, c = H + 1/2. The factor (1-theta)^-c is integrated
  // against the hats in closed form; the remainder (theta^b - 1)(1-theta)^-c is bounded.
  void build_low(int n, double h) {
    const double b = 0.5 - h, c = h + 0.5;
    wl_ = detail::TriangularTable(n);
    const Rule01& rule = gauss_legendre01(10);
    auto rest = [b, c](double theta, double om) {
      return std::expm1(b * (om < 0.5 ? std::log1p(-om) : std::log(theta))) * std::pow(om, -c);
    };
    const double p_end = std::ceil(4.0 / (1.0 + b));
    for (int k = 1; k <= n; ++k)
      for (int i = 0; i < k; ++i) {
        double l, r;
        detail::theta_moments(k, i, 4.0, p_end, rule, rest, l, r);
        double oa = 1.0 - static_cast<double>(i) / k;        // 1 - a
        double ob = 1.0 - static_cast<double>(i + 1) / k;    // 1 - b
        double m0 = (std::pow(oa, 1.0 - c) - (ob > 0 ? std::pow(ob, 1.0 - c) : 0.0)) / (1.0 - c);
        double m1 = (std::pow(oa, 2.0 - c) - (ob > 0 ? std::pow(ob, 2.0 - c) : 0.0)) / (2.0 - c);
        std::size_t idx = wl_.at(k, i);
        wl_.left[idx] = l + k * (m1 - ob * m0);
        wl_.right[idx] = r + k * (oa * m0 - m1);
      }
    low_pref_.assign(n + 1, 0.0);
    const double g = gamma_fn(b);
    for (int k = 1; k <= n; ++k) low_pref_[k] = sqrt_v_ * std::pow(grid_.node(k), b) / g;
  }

  Hurst hurst_;
  Grid grid_;
  WeightRoute route_;
  double sqrt_v_;
  double alpha_ = 0.0;
  double inv_gamma_ = 1.0;
  double c0_ = 0.0;
  double origin_coef_ = 0.0;
  std::vector<double> weyl_a_, weyl_b_;
  std::vector<Mat> a3_, a4_;
  detail::TriangularTable w2_{0};
  detail::TriangularTable wl_{0};
  std::vector<double> low_pref_;
};

// ---------------------------------------------------------------------------
// Plan-level operations

inline GridPath build_RHh_density(const WeightPlan& plan) {
  Eigen::MatrixXd rho;
  if (plan.model) {
    DiffusionTable tab(plan.model->diffusion, plan.grid);
    detail::sde_density(*plan.model, tab, plan.grid, plan.path.values, plan.v, rho);
  } else {
    const auto& m = *plan.functional;
    DiffusionTable tab(m.diffusion, plan.grid);
    detail::sfde_density(m, tab, *plan.gamma, plan.path.grid, plan.path.origin, plan.path.values,
                         plan.eta, rho);
  }
  return GridPath(plan.grid, std::move(rho));
}

// R_H h at the nodes: left Riemann sums of the density, matching the Euler drift rule.
inline GridPath cumulative_RHh(const GridPath& density) {
  const Grid& g = density.grid;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(g.size(), density.dim());
  for (int k = 0; k < g.intervals(); ++k)
    c.row(k + 1) = c.row(k) + g.step() * density.values.row(k);
  return GridPath(g, std::move(c));
}

inline GridPath khstar_h_generic(const WeightPlan& plan) {
  GridPath rho = build_RHh_density(plan);
  Hurst hurst = plan.model ? plan.model->hurst : plan.functional->hurst;
  KhInverse op(hurst, plan.grid);
  Eigen::MatrixXd out(rho.values.rows(), rho.values.cols());
  for (int c = 0; c < rho.dim(); ++c) op.apply(rho.values.col(c).data(), out.col(c).data());
  return GridPath(plan.grid, std::move(out));
}

inline GridPath khstar_h_explicit(const WeightPlan& plan, TermDiagnostics* diag = nullptr) {
  if (!plan.model) throw InvalidArgument("khstar_h_explicit: requires an SDE plan");
  const ModelSpec& m = *plan.model;
  if (m.hurst.regime() != Regime::High) throw InvalidArgument("khstar_h_explicit: requires H > 1/2");
  DiffusionTable tab(m.diffusion, plan.grid);
  IntegrandTables tables(m.hurst, plan.grid, tab, WeightRoute::Explicit);
  Eigen::MatrixXd out;
  tables.explicit_integrand(m, tab, plan.path.values, plan.v, out, diag);
  return GridPath(plan.grid, std::move(out));
}

inline GridPath khstar_h_lowH(const WeightPlan& plan) {
  if (!plan.model) throw InvalidArgument("khstar_h_lowH: requires an SDE plan");
  const ModelSpec& m = *plan.model;
  if (m.hurst.regime() != Regime::Low) throw InvalidArgument("khstar_h_lowH: requires H < 1/2");
  DiffusionTable tab(m.diffusion, plan.grid);
  if (!tab.identity) throw InvalidArgument("khstar_h_lowH: requires sigma = Id");
  IntegrandTables tables(m.hurst, plan.grid, tab, WeightRoute::LowH);
  GridPath rho = build_RHh_density(plan);
  Eigen::MatrixXd out;
  tables.low_h_integrand(rho.values, out);
  return GridPath(plan.grid, std::move(out));
}

struct MalliavinWeight {
  double delta_h = 0.0;
  GridPath integrand;
  TermDiagnostics diagnostics;
};

// Left-point sum  sum_k <phi(t_k), dW_k>.
inline double weight_sum(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& dw) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < dw.rows(); ++k) acc += phi.row(k).dot(dw.row(k));
  return acc;
}

// For H > 1/2 the integrand behaves like A s^-a near 0 with A fixed by rho(0). A
// left-point sum integrates that term with O(h^(1-a)) error, so each cell's value
// swaps the singular term at t_i for its exact cell average. rho(0) depends only on
// the initial data, so the corrected integrand stays adapted.
class SingularCellCorrection {
 public:
  SingularCellCorrection(Hurst hurst, const Grid& grid) : active_(hurst.regime() == Regime::High) {
    if (!active_) return;
    const int n = grid.intervals();
    const double a = hurst.value() - 0.5, h = grid.step();
    amplitude_ = std::sqrt(kernel_variance_constant(hurst)) * gamma_fn(1.0 - a) / gamma_fn(1.0 - 2.0 * a);
    shift_.assign(n + 1, 0.0);
    for (int i = 1; i < n; ++i) {
      double avg = std::pow(h, -a) * (std::pow(i + 1.0, 1.0 - a) - std::pow(i, 1.0 - a)) / (1.0 - a);
      shift_[i] = avg - std::pow(i * h, -a);
    }
  }

  bool active() const { return active_; }

  // phi holds node values (node 0 already the cell average); rho0 is rho at t = 0.
  void apply(const Eigen::Ref<const Eigen::RowVectorXd>& rho0, Eigen::MatrixXd& phi) const {
    if (!active_) return;
    for (std::size_t i = 1; i < shift_.size(); ++i)
      phi.row(static_cast<Eigen::Index>(i)) += (amplitude_ * shift_[i]) * rho0;
  }

 private:
  bool active_;
  double amplitude_ = 0.0;
  std::vector<double> shift_;
};

inline MalliavinWeight malliavin_weight(const WeightPlan& plan, const GridPath& integrand,
                                        TermDiagnostics diag = {}) {
  const WienerPath& w = plan.wiener();
  if (integrand.grid != w.grid || integrand.dim() != w.increments.cols())
    throw InvalidArgument("malliavin_weight: integrand does not match the Wiener path");
  Hurst hurst = plan.model ? plan.model->hurst : plan.functional->hurst;
  SingularCellCorrection corr(hurst, plan.grid);
  Eigen::MatrixXd cells = integrand.values;
  if (corr.active()) corr.apply(build_RHh_density(plan).values.row(0), cells);
  double d = weight_sum(cells, w.increments);
  if (!std::isfinite(d)) throw InsufficientRegularity("malliavin_weight: non-finite weight");
  return MalliavinWeight{d, integrand, diag};
}

// LowH needs sigma = Id; everything else falls back to the generic route.
inline WeightRoute default_route(const ModelSpec& model) {
  return model.hurst.regime() == Regime::Low && model.diffusion.identity ? WeightRoute::LowH : WeightRoute::Generic;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimator

struct EstimateReport {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  double oracle_value = std::nan("");
  double oracle_error = std::nan("");
  std::string method;
  double weight_mean = 0.0;  // sample mean of delta(h)
  double weight_se = 0.0;
};

struct GradientOptions {
  int intervals = 256;
  McOptions mc;
  std::optional<WeightRoute> route;  // default by regime
};

// Everything a worker needs that does not change between paths.
class BismutSetup {
 public:
  BismutSetup(const ModelSpec& model, int intervals, WeightRoute route)
      : model_(model),
        grid_(0.0, model.horizon, intervals),
        route_(route),
        sampler_(model.hurst, grid_),
        solver_(model, grid_),
        tables_(model.hurst, grid_, solver_.diffusion(), route) {}

  const ModelSpec& model() const { return model_; }
  const Grid& grid() const { return grid_; }
  WeightRoute route() const { return route_; }
  const VolterraSampler& sampler() const { return sampler_; }
  const EulerSolver& solver() const { return solver_; }
  const IntegrandTables& tables() const { return tables_; }

 private:
  ModelSpec model_;
  Grid grid_;
  WeightRoute route_;
  VolterraSampler sampler_;
  EulerSolver solver_;
  IntegrandTables tables_;
};

// Per-thread scratch; evaluates one path from its seed.
class BismutWorker {
 public:
  explicit BismutWorker(const BismutSetup& s)
      : s_(s), inverse_(s.model().hurst, s.grid()), correction_(s.model().hurst, s.grid()) {
    dw_.resize(s.grid().intervals(), s.model().dim);
  }

  // Fills dW, B, X and the integrand for direction v; returns delta(h).
  double run(std::uint64_t seed, const Vec& x0, const Vec& v) {
    fill_wiener_increments(s_.grid(), seed, dw_);
    s_.sampler().apply(dw_, bh_);
    s_.solver().solve(bh_, x0, x_);
    integrand(v);
    double d;
    if (correction_.active()) {
      cells_ = phi_;
      correction_.apply(origin_density(x0, v).transpose(), cells_);
      d = weight_sum(cells_, dw_);
    } else {
      d = weight_sum(phi_, dw_);
    }
    if (!std::isfinite(d)) throw InsufficientRegularity("non-finite Malliavin weight");
    return d;
  }

  void integrand(const Vec& v) {
    const ModelSpec& m = s_.model();
    switch (s_.route()) {
      case WeightRoute::Explicit:
        s_.tables().explicit_integrand(m, s_.solver().diffusion(), x_, v, phi_, nullptr);
        return;
      case WeightRoute::LowH:
        detail::sde_density(m, s_.solver().diffusion(), s_.grid(), x_, v, rho_);
        s_.tables().low_h_integrand(rho_, phi_);
        return;
      case WeightRoute::Generic:
        detail::sde_density(m, s_.solver().diffusion(), s_.grid(), x_, v, rho_);
        phi_.resize(rho_.rows(), rho_.cols());
        for (Eigen::Index c = 0; c < rho_.cols(); ++c)
          inverse_.apply(rho_.col(c).data(), phi_.col(c).data());
        return;
    }
  }

  // rho(0) = sigma^-1(0) [grad b(x0) v + v/T].
  Vec origin_density(const Vec& x0, const Vec& v) const {
    const ModelSpec& m = s_.model();
    Vec inner = v / m.horizon;
    if (!m.drift.zero) inner += m.drift.gradient(x0) * v;
    return s_.solver().diffusion().identity ? inner : Vec(s_.solver().diffusion().sigma_inv[0] * inner);
  }

  const Eigen::MatrixXd& increments() const { return dw_; }
  const Eigen::MatrixXd& fbm() const { return bh_; }
  const Eigen::MatrixXd& path() const { return x_; }
  const Eigen::MatrixXd& integrand_values() const { return phi_; }
  Vec terminal() const { return x_.row(x_.rows() - 1).transpose(); }

 private:
  const BismutSetup& s_;
  KhInverse inverse_;
  SingularCellCorrection correction_;
  Eigen::MatrixXd dw_, bh_, x_, rho_, phi_, cells_;
};

inline EstimateReport bismut_gradient(const ModelSpec& model, const TestFunction& f, const Vec& x,
                                      const Vec& v, const GradientOptions& opt) {
  if (opt.mc.paths < 100) throw InvalidArgument("bismut_gradient: need N >= 100");
  if (x.size() != model.dim || v.size() != model.dim)
    throw InvalidArgument("bismut_gradient: dimension mismatch");
  WeightRoute route = opt.route.value_or(default_route(model));
  BismutSetup setup(model, opt.intervals, route);
  PathTable t = run_paths(opt.mc, 2, [&]() {
    return [&, w = std::make_shared<BismutWorker>(setup)](std::size_t, std::uint64_t seed,
                                                          double* row) {
      double d = w->run(seed, x, v);
      row[0] = f.value(w->terminal()) * d;
      row[1] = d;
    };
  });
  SampleStats s = column_stats(t, 0), sw = column_stats(t, 1);
  EstimateReport r;
  r.estimate = s.mean;
  r.standard_error = s.std_error;
  r.paths = opt.mc.paths;
  r.seed = opt.mc.seed;
  r.method = std::string("bismut/") + route_name(route);
  r.weight_mean = sw.mean;
  r.weight_se = sw.std_error;
  return r;
}

// ---------------------------------------------------------------------------
// Functional equations

struct SfdeGradientOptions {
  int intervals = 256;  // cells on [0, T]; r0 must be a multiple of T / intervals
  McOptions mc;
};

class SfdeSetup {
 public:
  SfdeSetup(const FunctionalModelSpec& model, const Eigen::MatrixXd& eta, int intervals)
      : model_(model),
        positive_(0.0, model.horizon, intervals),
        full_(SfdeSolver::full_grid(model, intervals)),
        solver_(model, full_),
        sampler_(model.hurst, positive_),
        gamma_(model.delay, model.horizon),
        eta_(eta),
        correction_(model.hurst, positive_) {
    if (eta.rows() != solver_.lag() + 1 || eta.cols() != model.dim)
      throw InvalidArgument("sfde: eta must be sampled on [-r0, 0]");
  }

  const FunctionalModelSpec& model() const { return model_; }
  const Grid& positive_grid() const { return positive_; }
  const Grid& full_grid() const { return full_; }
  const SfdeSolver& solver() const { return solver_; }
  const VolterraSampler& sampler() const { return sampler_; }
  const CutoffGamma& gamma() const { return gamma_; }
  const Eigen::MatrixXd& eta() const { return eta_; }
  const SingularCellCorrection& correction() const { return correction_; }

 private:
  FunctionalModelSpec model_;
  Grid positive_;
  Grid full_;
  SfdeSolver solver_;
  VolterraSampler sampler_;
  CutoffGamma gamma_;
  Eigen::MatrixXd eta_;
  SingularCellCorrection correction_;
};

inline EstimateReport sfde_bismut_gradient(const FunctionalModelSpec& model, const TestFunction& f,
                                           const Eigen::MatrixXd& eta, const SfdeGradientOptions& opt) {
  if (opt.mc.paths < 100) throw InvalidArgument("sfde_bismut_gradient: need N >= 100");
  SfdeSetup setup(model, eta, opt.intervals);
  PathTable t = run_paths(opt.mc, 2, [&]() {
    struct State {
      KhInverse inv;
      Eigen::MatrixXd dw, bh, x, rho, phi;
    };
    auto st = std::make_shared<State>(State{KhInverse(model.hurst, setup.positive_grid()), {}, {}, {}, {}, {}});
    return [&, st](std::size_t, std::uint64_t seed, double* row) {
      const Grid& g = setup.positive_grid();
      st->dw.resize(g.intervals(), model.dim);
      fill_wiener_increments(g, seed, st->dw);
      setup.sampler().apply(st->dw, st->bh);
      setup.solver().solve(st->bh, st->x);
      detail::sfde_density(model, setup.solver().diffusion(), setup.gamma(), setup.full_grid(),
                           setup.solver().lag(), st->x, setup.eta(), st->rho);
      st->phi.resize(st->rho.rows(), st->rho.cols());
      for (Eigen::Index c = 0; c < st->rho.cols(); ++c) st->inv.apply(st->rho.col(c).data(), st->phi.col(c).data());
      setup.correction().apply(st->rho.row(0), st->phi);
      double d = weight_sum(st->phi, st->dw);
      row[0] = f.value(st->x.row(st->x.rows() - 1).transpose()) * d;
      row[1] = d;
    };
  });
  SampleStats s = column_stats(t, 0), sw = column_stats(t, 1);
  EstimateReport r;
  r.estimate = s.mean;
  r.standard_error = s.std_error;
  r.paths = opt.mc.paths;
  r.seed = opt.mc.seed;
  r.method = "bismut/sfde";
  r.weight_mean = sw.mean;
  r.weight_se = sw.std_error;
  return r;
}

// ---------------------------------------------------------------------------
// Cameron-Martin shift test

struct ShiftRow {
  double eps = 0.0;
  double defect = 0.0;
};

struct ShiftTestReport {
  std::vector<ShiftRow> rows;
  std::vector<double> ratios;  // defect(eps_i) / defect(eps_{i+1})
  double scale = 0.0;          // |X(T)| + |v|, for judging roundoff-level defects
};

// For one noise realization compare X^{x+eps v}(T) with X^x(T) driven by B + eps R_H h.
inline ShiftTestReport cameron_martin_shift_test(const ModelSpec& model, const Vec& x, const Vec& v,
                                                 const std::vector<double>& eps, std::uint64_t seed,
                                                 int intervals = 256) {
  for (double e : eps)
    if (!(e > 0.0 && e <= 0.1)) throw InvalidArgument("shift test: eps must lie in (0, 0.1]");
  Grid g(0.0, model.horizon, intervals);
  VolterraSampler sampler(model.hurst, g);
  FbmPath noise = sampler.sample(seed, model.dim);
  EulerSolver solver(model, g);
  Eigen::MatrixXd base;
  solver.solve(noise.values, x, base);
  SolutionPath path{g, base, noise, 0};
  WeightPlan plan = make_weight_plan(model, path, v);
  GridPath shift = cumulative_RHh(build_RHh_density(plan));
  // sigma(t_k)(B_{k+1}-B_k + eps dR_k) = sigma dB + eps h rho_k with rho carrying sigma^-1.
  ShiftTestReport rep;
  rep.scale = base.row(intervals).norm() + v.norm();
  for (double e : eps) {
    Eigen::MatrixXd moved, shifted;
    solver.solve(noise.values, x + e * v, moved);
    Eigen::MatrixXd bs = noise.values + e * shift.values;
    solver.solve(bs, x, shifted);
    rep.rows.push_back({e, (moved.row(intervals) - shifted.row(intervals)).norm()});
  }
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
    rep.ratios.push_back(rep.rows[i].defect / rep.rows[i + 1].defect);
  return rep;
}

}  // namespace fbm_bismut
