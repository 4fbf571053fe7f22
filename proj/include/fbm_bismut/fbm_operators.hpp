#pragma once

// fBm kernel, covariance, the transfer operators K_H^*, K_H, K_H^-1, and path samplers.
//
// Kernel normalization: K_H(t,s) = c_H (t-s)^(H-1/2) F(H-1/2, 1/2-H; H+1/2; 1-t/s) / Gamma(H+1/2)
// with c_H = V_H^(-1/2), V_H = Gamma(2-2H) cos(pi H) / (pi H (1-2H)), so that
// int_0^(t^s) K(t,r) K(s,r) dr = R_H(t,s) holds exactly. The fractional-calculus
// forms of K_H^-1 invert the unnormalized operator; they are rescaled by sqrt(V_H).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/fractional_calculus.hpp"
#include "fbm_bismut/grid.hpp"
#include "fbm_bismut/quadrature.hpp"
#include "fbm_bismut/rng.hpp"
#include "fbm_bismut/special_functions.hpp"

namespace fbm_bismut {

enum class Regime { Low, Brownian, High };

class Hurst {
 public:
  explicit Hurst(double h) : h_(h) {
    if (!(h > 0.0 && h < 1.0)) throw InvalidArgument("Hurst: need 0 < H < 1");
  }
  double value() const { return h_; }
  Regime regime() const {
    return h_ < 0.5 ? Regime::Low : (h_ > 0.5 ? Regime::High : Regime::Brownian);
  }

 private:
  double h_;
};

inline double covariance(Hurst hurst, double t, double s) {
  if (t < 0.0 || s < 0.0) throw InvalidArgument("covariance: negative time");
  double e = 2.0 * hurst.value();
  return 0.5 * (std::pow(t, e) + std::pow(s, e) - std::pow(std::abs(t - s), e));
}

// V_H = int_0^1 K_unnormalized(1,r)^2 dr.
inline double kernel_variance_constant(Hurst hurst) {
  double h = hurst.value();
  if (h == 0.5) return 1.0;
  return gamma_fn(2.0 - 2.0 * h) * std::cos(std::numbers::pi * h) /
         (std::numbers::pi * h * (1.0 - 2.0 * h));
}

class KernelEvaluator {
 public:
  explicit KernelEvaluator(Hurst hurst)
      : hurst_(hurst),
        h_(hurst.value()),
        f_(h_ - 0.5, 0.5 - h_, h_ + 0.5),
        fd_(h_ + 0.5, 1.5 - h_, h_ + 1.5) {
    scale_ = 1.0 / (gamma_fn(h_ + 0.5) * std::sqrt(kernel_variance_constant(hurst)));
    dcoef_ = -(h_ - 0.5) * (h_ - 0.5) / (h_ + 0.5);
  }

  Hurst hurst() const { return hurst_; }

  double operator()(double t, double s) const {
    check(t, s);
    if (h_ == 0.5) return 1.0;
    return scale_ * std::pow(t - s, h_ - 0.5) * f_(1.0 - t / s);
  }

  // d/dt by termwise differentiation: d/dz F(a,b;c;z) = (ab/c) F(a+1,b+1;c+1;z), dz/dt = -1/s.
  double dt(double t, double s) const {
    check(t, s);
    if (h_ == 0.5) return 0.0;
    double z = 1.0 - t / s;
    double d = t - s;
    double lead = (h_ - 0.5) * std::pow(d, h_ - 1.5) * f_(z);
    double tail = -std::pow(d, h_ - 0.5) / s * dcoef_ * fd_(z);
    return scale_ * (lead + tail);
  }

 private:
  static void check(double t, double s) {
    if (!(s > 0.0) || !(s < t)) throw InvalidArgument("kernel: need 0 < s < t");
  }

  Hurst hurst_;
  double h_;
  Hyp2F1 f_;
  Hyp2F1 fd_;
  double scale_;
  double dcoef_;
};

inline double kernel_kh(Hurst hurst, double t, double s) { return KernelEvaluator(hurst)(t, s); }
inline double kernel_kh_dt(Hurst hurst, double t, double s) {
  return KernelEvaluator(hurst).dt(t, s);
}

// Quadrature nodes per grid cell: two half panels, the right one graded toward
// t_{i+1} where K(t_{i+1}, .) is singular, and the first cell also graded toward 0.
struct CellRule {
  Grid grid;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<int> cell_begin;  // nodes of cell i are [cell_begin[i], cell_begin[i+1])

  int cell_of_node(int q) const {
    auto it = std::upper_bound(cell_begin.begin(), cell_begin.end(), q);
    return static_cast<int>(it - cell_begin.begin()) - 1;
  }
};

inline double grading_exponent(Hurst hurst) {
  double gap = 1.0 - 2.0 * std::abs(hurst.value() - 0.5);
  return std::ceil(4.0 / gap);
}

inline CellRule make_cell_rule(const Grid& grid, Hurst hurst, int points = 10) {
  const Rule01& rule = gauss_legendre01(points);
  double p = grading_exponent(hurst);
  CellRule cr{grid, {}, {}, {}};
  cr.cell_begin.reserve(grid.intervals() + 1);
  for (int i = 0; i < grid.intervals(); ++i) {
    cr.cell_begin.push_back(static_cast<int>(cr.nodes.size()));
    double a = grid.node(i), b = grid.node(i + 1), mid = 0.5 * (a + b);
    append_panel(a, mid, i == 0 ? Grading::TowardStart : Grading::None, p, rule, cr.nodes,
                 cr.weights);
    append_panel(mid, b, Grading::TowardEnd, p, rule, cr.nodes, cr.weights);
  }
  cr.cell_begin.push_back(static_cast<int>(cr.nodes.size()));
  return cr;
}

// Values K(t_j, r_q) for every grid node t_j and every quadrature node r_q.
class KernelTable {
 public:
  KernelTable(Hurst hurst, const Grid& grid, int points = 10)
      : hurst_(hurst), rule_(make_cell_rule(grid, hurst, points)) {
    KernelEvaluator k(hurst);
    const int rows = grid.size();
    const int q = static_cast<int>(rule_.nodes.size());
    values_ = Eigen::MatrixXd::Zero(rows, q);
    for (int j = 1; j < rows; ++j) {
      double t = grid.node(j);
      int end = rule_.cell_begin[j];
      for (int c = 0; c < end; ++c) values_(j, c) = k(t, rule_.nodes[c]);
    }
  }

  Hurst hurst() const { return hurst_; }
  const Grid& grid() const { return rule_.grid; }
  const CellRule& rule() const { return rule_; }
  const Eigen::MatrixXd& values() const { return values_; }

  // kappa(j, i) = h^-1 int_{cell i} K(t_j, s) ds.
  Eigen::MatrixXd cell_averages() const {
    const Grid& g = rule_.grid;
    Eigen::MatrixXd kappa = Eigen::MatrixXd::Zero(g.size(), g.intervals());
    for (int i = 0; i < g.intervals(); ++i) {
      for (int q = rule_.cell_begin[i]; q < rule_.cell_begin[i + 1]; ++q) {
        double w = rule_.weights[q] / g.step();
        for (int j = i + 1; j < g.size(); ++j) kappa(j, i) += w * values_(j, q);
      }
    }
    return kappa;
  }

  // G(j,k) = int K(t_j,r) K(t_k,r) dr, all node pairs at once.
  Eigen::MatrixXd gram() const {
    Eigen::Map<const Eigen::VectorXd> w(rule_.weights.data(),
                                        static_cast<Eigen::Index>(rule_.weights.size()));
    Eigen::MatrixXd weighted = values_ * w.asDiagonal();
    return weighted * values_.transpose();
  }

 private:
  Hurst hurst_;
  CellRule rule_;
  Eigen::MatrixXd values_;
};

// A function known at quadrature nodes with weights, i.e. an element of L^2 under a rule.
struct L2Image {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> values;

  double inner(const L2Image& o) const {
    if (o.values.size() != values.size()) throw InvalidArgument("L2Image: rule mismatch");
    double acc = 0.0;
    for (std::size_t q = 0; q < values.size(); ++q) acc += weights[q] * values[q] * o.values[q];
    return acc;
  }
  double norm() const { return std::sqrt(inner(*this)); }
};

namespace detail {

// Step-function reading: phi equals values[i] on [t_i, t_{i+1}).
// K*phi(s) = sum_j (phi_{j-1} - phi_j) K(t_j, s) + phi_{n-1} K(T, s), obtained from
// the general formula by telescoping the derivative integral cell by cell.
inline std::vector<double> kh_star_coefficients(const GridFunction& phi) {
  const int n = phi.grid.intervals();
  std::vector<double> c(n + 1, 0.0);
  for (int j = 1; j < n; ++j) c[j] = phi.values[j - 1] - phi.values[j];
  c[n] = phi.values[n - 1];
  return c;
}

}  // namespace detail

// K_H^* phi for step phi, returned at the nodes of the table's quadrature rule.
inline L2Image kh_star_image(const KernelTable& table, const GridFunction& phi) {
  if (phi.grid != table.grid()) throw InvalidArgument("kh_star_image: grid mismatch");
  const auto c = detail::kh_star_coefficients(phi);
  Eigen::Map<const Eigen::VectorXd> cv(c.data(), static_cast<Eigen::Index>(c.size()));
  Eigen::VectorXd img = table.values().transpose() * cv;
  const CellRule& r = table.rule();
  return L2Image{r.nodes, r.weights, std::vector<double>(img.data(), img.data() + img.size())};
}

// K_H^* phi at the grid nodes (right-continuous step reading of phi).
inline GridFunction apply_kh_star(Hurst hurst, const GridFunction& phi) {
  const Grid& g = phi.grid;
  if (hurst.regime() == Regime::Brownian) {
    std::vector<double> out(phi.values.begin(), phi.values.end());
    out[g.intervals()] = 0.0;
    return GridFunction(g, std::move(out));
  }
  KernelEvaluator k(hurst);
  const auto c = detail::kh_star_coefficients(phi);
  std::vector<double> out(g.size(), 0.0);
  for (int m = 0; m < g.intervals(); ++m) {
    if (m == 0) continue;  // K(t, s) ~ s^-|H-1/2| as s -> 0; the node value is left at 0
    double s = g.node(m);
    double acc = 0.0;
    for (int j = m + 1; j <= g.intervals(); ++j) acc += c[j] * k(g.node(j), s);
    out[m] = acc;
  }
  return GridFunction(g, std::move(out));
}

// Reduced form for H > 1/2: (K*phi)(s) = int_s^T phi(r) dK/dr(r,s) dr, by graded
// Gauss-Legendre on each cell; independent of the telescoped kernel differences.
inline double kh_star_reduced(Hurst hurst, const GridFunction& phi, double s, int points = 20) {
  if (hurst.regime() != Regime::High) throw InvalidArgument("kh_star_reduced: requires H > 1/2");
  const Grid& g = phi.grid;
  if (!(s > g.start() && s < g.end())) throw InvalidArgument("kh_star_reduced: s outside (0,T)");
  KernelEvaluator k(hurst);
  const Rule01& rule = gauss_legendre01(points);
  double p = std::ceil(4.0 / (hurst.value() - 0.5));
  int m = std::min(static_cast<int>((s - g.start()) / g.step()), g.intervals() - 1);
  double acc = 0.0;
  for (int i = m; i < g.intervals(); ++i) {
    double a = std::max(g.node(i), s), b = g.node(i + 1);
    if (b <= a) continue;
    std::vector<double> nodes, weights;
    append_panel(a, b, i == m ? Grading::TowardStart : Grading::None, p, rule, nodes, weights);
    double part = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q)
      if (nodes[q] > s) part += weights[q] * k.dt(nodes[q], s);
    acc += phi.values[i] * part;
  }
  return acc;
}

// (K_H g)(t_j) = int_0^t_j K(t_j,s) g(s) ds with g interpolated linearly between nodes.
inline GridFunction apply_kh_forward(const KernelTable& table, const GridFunction& g) {
  if (g.grid != table.grid()) throw InvalidArgument("apply_kh_forward: grid mismatch");
  const CellRule& r = table.rule();
  const Grid& grid = table.grid();
  Eigen::VectorXd wg(static_cast<Eigen::Index>(r.nodes.size()));
  for (int i = 0; i < grid.intervals(); ++i) {
    for (int q = r.cell_begin[i]; q < r.cell_begin[i + 1]; ++q) {
      double u = (r.nodes[q] - grid.node(i)) / grid.step();
      wg[q] = r.weights[q] * ((1.0 - u) * g.values[i] + u * g.values[i + 1]);
    }
  }
  Eigen::VectorXd out = table.values() * wg;
  return GridFunction(grid, std::vector<double>(out.data(), out.data() + out.size()));
}

// K_H^-1 acting on fn = int_0^. rho, given the density rho = fn' at the nodes.
//
//  H > 1/2: sqrt(V_H) s^a D^a(s^-a rho),     a = H - 1/2
//  H < 1/2: sqrt(V_H) s^-b I^b(s^b rho),     b = 1/2 - H
//
// The constant part rho(0) is handled in closed form, leaving a fractional
// operator applied to a function vanishing at the origin. For H > 1/2 the
// output is unbounded like rho(0) s^-a; node 0 carries its average over [0, h].
class KhInverse {
 public:
  KhInverse(Hurst hurst, const Grid& grid)
      : hurst_(hurst), grid_(grid), sqrt_v_(std::sqrt(kernel_variance_constant(hurst))) {
    const int n = grid.intervals();
    double h = hurst.value();
    pow_minus_.assign(n + 1, 0.0);
    pow_plus_.assign(n + 1, 0.0);
    if (hurst.regime() == Regime::High) {
      double a = h - 0.5;
      deriv_.emplace(a, grid.step(), n);
      const_coef_ = gamma_fn(1.0 - a) / gamma_fn(1.0 - 2.0 * a);
      origin_coef_ = const_coef_ * std::pow(grid.step(), -a) / (1.0 - a);
      for (int k = 1; k <= n; ++k) {
        pow_minus_[k] = std::pow(grid.node(k) - grid.start(), -a);
        pow_plus_[k] = 1.0 / pow_minus_[k];
      }
    } else if (hurst.regime() == Regime::Low) {
      double b = 0.5 - h;
      integ_.emplace(b, grid.step(), n);
      const_coef_ = gamma_fn(1.0 + b) / gamma_fn(1.0 + 2.0 * b);
      for (int k = 1; k <= n; ++k) {
        pow_plus_[k] = std::pow(grid.node(k) - grid.start(), b);
        pow_minus_[k] = 1.0 / pow_plus_[k];
      }
    }
    scratch_.assign(n + 1, 0.0);
    scratch2_.assign(n + 1, 0.0);
  }

  Hurst hurst() const { return hurst_; }
  const Grid& grid() const { return grid_; }

  // rho and out are strided arrays of n+1 entries. Not thread-safe (uses scratch).
  void apply(const double* rho, double* out, std::ptrdiff_t stride = 1) {
    const int n = grid_.intervals();
    const double r0 = rho[0];
    switch (hurst_.regime()) {
      case Regime::Brownian:
        for (int k = 0; k <= n; ++k) out[k * stride] = rho[k * stride];
        return;
      case Regime::High: {
        scratch_[0] = 0.0;
        for (int k = 1; k <= n; ++k) scratch_[k] = pow_minus_[k] * (rho[k * stride] - r0);
        deriv_->apply(scratch_.data(), scratch2_.data(), n);
        out[0] = sqrt_v_ * r0 * origin_coef_;
        for (int k = 1; k <= n; ++k)
          out[k * stride] =
              sqrt_v_ * (pow_plus_[k] * scratch2_[k] + r0 * const_coef_ * pow_minus_[k]);
        return;
      }
      case Regime::Low: {
        scratch_[0] = 0.0;
        for (int k = 1; k <= n; ++k) scratch_[k] = pow_plus_[k] * (rho[k * stride] - r0);
        integ_->apply(scratch_.data(), scratch2_.data(), n);
        out[0] = 0.0;
        for (int k = 1; k <= n; ++k)
          out[k * stride] =
              sqrt_v_ * (pow_minus_[k] * scratch2_[k] + r0 * const_coef_ * pow_plus_[k]);
        return;
      }
    }
  }

 private:
  Hurst hurst_;
  Grid grid_;
  double sqrt_v_;
  double const_coef_ = 0.0;
  double origin_coef_ = 0.0;
  std::optional<FracDerivativeWeights> deriv_;
  std::optional<FracIntegralWeights> integ_;
  std::vector<double> pow_minus_, pow_plus_;
  std::vector<double> scratch_, scratch2_;
};

namespace detail {

// Composite D-form for H < 1/2 without a derivative:
// sqrt(V_H) s^b D^b( s^-b D^(2H) fn ), b = 1/2 - H.
inline GridFunction kh_inverse_composite(Hurst hurst, const GridFunction& fn) {
  const Grid& g = fn.grid;
  const int n = g.intervals();
  double h = hurst.value(), b = 0.5 - h;
  std::vector<double> d1(n + 1), y(n + 1, 0.0), d2(n + 1);
  FracDerivativeWeights(2.0 * h, g.step(), n).apply(fn.values.data(), d1.data(), n);
  for (int k = 1; k <= n; ++k) y[k] = std::pow(g.node(k) - g.start(), -b) * d1[k];
  FracDerivativeWeights(b, g.step(), n).apply(y.data(), d2.data(), n);
  double sv = std::sqrt(kernel_variance_constant(hurst));
  std::vector<double> out(n + 1, 0.0);
  for (int k = 1; k <= n; ++k) out[k] = sv * std::pow(g.node(k) - g.start(), b) * d2[k];
  return GridFunction(g, std::move(out));
}

}  // namespace detail

inline GridFunction apply_kh_inverse(Hurst hurst, const GridFunction& fn,
                                     const std::optional<GridFunction>& derivative) {
  const Grid& g = fn.grid;
  double scale = 1.0;
  for (double v : fn.values) scale = std::max(scale, std::abs(v));
  if (std::abs(fn.values[0]) > 1e-14 * scale)
    throw InvalidArgument("apply_kh_inverse: fn(0) must vanish");
  if (!derivative) {
    if (hurst.regime() == Regime::Low) return detail::kh_inverse_composite(hurst, fn);
    throw InvalidArgument("apply_kh_inverse: derivative required for H >= 1/2");
  }
  if (derivative->grid != g) throw InvalidArgument("apply_kh_inverse: grid mismatch");
  KhInverse op(hurst, g);
  std::vector<double> out(g.size());
  op.apply(derivative->values.data(), out.data());
  return GridFunction(g, std::move(out));
}

// ---------------------------------------------------------------------------
// Paths and samplers

enum class Provenance { Volterra, CovFactor };

struct WienerPath {
  Grid grid;
  Eigen::MatrixXd increments;  // n x d
  std::uint64_t seed = 0;

  Eigen::MatrixXd path() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(grid.size(), increments.cols());
    for (int k = 0; k < grid.intervals(); ++k) w.row(k + 1) = w.row(k) + increments.row(k);
    return w;
  }
};

struct FbmPath {
  Grid grid;
  Eigen::MatrixXd values;  // (n+1) x d, row 0 is zero
  Provenance provenance = Provenance::Volterra;
  std::optional<WienerPath> wiener;

  int dim() const { return static_cast<int>(values.cols()); }
};

inline void fill_wiener_increments(const Grid& grid, std::uint64_t seed, Eigen::MatrixXd& dw) {
  NormalStream z(seed);
  double sh = std::sqrt(grid.step());
  for (Eigen::Index k = 0; k < dw.rows(); ++k)
    for (Eigen::Index i = 0; i < dw.cols(); ++i) dw(k, i) = sh * z();
}

inline WienerPath sample_wiener(const Grid& grid, std::uint64_t seed, int dim) {
  if (dim < 1) throw InvalidArgument("sample_wiener: dim must be positive");
  WienerPath w{grid, Eigen::MatrixXd(grid.intervals(), dim), seed};
  fill_wiener_increments(grid, seed, w.increments);
  return w;
}

// B(t_j) = sum_{i<j} kappa(j,i) dW_i with kappa the cell averages of K(t_j, .).
class VolterraSampler {
 public:
  VolterraSampler(Hurst hurst, const Grid& grid, int points = 10) : hurst_(hurst), grid_(grid) {
    if (hurst.regime() == Regime::Brownian) {
      kappa_ = Eigen::MatrixXd::Zero(grid.size(), grid.intervals());
      for (int j = 1; j < grid.size(); ++j) kappa_.row(j).head(j).setOnes();
    } else {
      kappa_ = KernelTable(hurst, grid, points).cell_averages();
    }
    lower_ = kappa_.bottomRows(grid.intervals());
  }

  Hurst hurst() const { return hurst_; }
  const Grid& grid() const { return grid_; }
  const Eigen::MatrixXd& weights() const { return kappa_; }

  void apply(const Eigen::MatrixXd& dw, Eigen::MatrixXd& out) const {
    out.resize(grid_.size(), dw.cols());
    out.row(0).setZero();
    out.bottomRows(grid_.intervals()).noalias() = lower_.triangularView<Eigen::Lower>() * dw;
  }

  FbmPath from_wiener(const WienerPath& w) const {
    if (w.grid != grid_) throw InvalidArgument("VolterraSampler: grid mismatch");
    FbmPath p{grid_, {}, Provenance::Volterra, w};
    apply(w.increments, p.values);
    return p;
  }

  FbmPath sample(std::uint64_t seed, int dim = 1) const {
    return from_wiener(sample_wiener(grid_, seed, dim));
  }

 private:
  Hurst hurst_;
  Grid grid_;
  Eigen::MatrixXd kappa_;
  Eigen::MatrixXd lower_;
};

// Cholesky factor of [R_H(t_j, t_k)], j,k >= 1.
class CovFactorSampler {
 public:
  CovFactorSampler(Hurst hurst, const Grid& grid) : hurst_(hurst), grid_(grid) {
    const int n = grid.intervals();
    Eigen::MatrixXd c(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        c(j, k) = covariance(hurst, grid.node(j + 1) - grid.start(), grid.node(k + 1) - grid.start());
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
      double jitter = 1e-12 * covariance(hurst, grid.length(), grid.length());
      c.diagonal().array() += jitter;
      llt.compute(c);
      if (llt.info() != Eigen::Success)
        throw FactorizationError(
            "COVFACTOR: covariance matrix not numerically positive definite; use a coarser grid "
            "or the VOLTERRA sampler");
    }
    factor_ = llt.matrixL();
  }

  const Eigen::MatrixXd& factor() const { return factor_; }

  FbmPath sample(std::uint64_t seed, int dim = 1) const {
    const int n = grid_.intervals();
    Eigen::MatrixXd z(n, dim);
    NormalStream rng(seed);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < dim; ++i) z(k, i) = rng();
    FbmPath p{grid_, Eigen::MatrixXd::Zero(grid_.size(), dim), Provenance::CovFactor, std::nullopt};
    p.values.bottomRows(n).noalias() = factor_.triangularView<Eigen::Lower>() * z;
    return p;
  }

 private:
  Hurst hurst_;
  Grid grid_;
  Eigen::MatrixXd factor_;
};

inline FbmPath sample_fbm(Hurst hurst, const Grid& grid, std::uint64_t seed, int dim = 1,
                          Provenance sampler = Provenance::Volterra) {
  if (sampler == Provenance::Volterra) return VolterraSampler(hurst, grid).sample(seed, dim);
  return CovFactorSampler(hurst, grid).sample(seed, dim);
}

// sup_{s<t} |f(t)-f(s)| / |t-s|^lambda over node pairs (Euclidean norm for paths).
inline double holder_norm(const Eigen::MatrixXd& values, const Grid& grid, double lambda0) {
  if (!(lambda0 > 0.0 && lambda0 <= 1.0)) throw InvalidArgument("holder_norm: need 0 < lambda <= 1");
  const int n = grid.intervals();
  std::vector<double> inv(n + 1, 0.0);
  for (int m = 1; m <= n; ++m) inv[m] = std::pow(m * grid.step(), -lambda0);
  double best = 0.0;
  for (int j = 0; j <= n; ++j)
    for (int k = j + 1; k <= n; ++k)
      best = std::max(best, (values.row(k) - values.row(j)).norm() * inv[k - j]);
  return best;
}

inline double holder_norm(const GridFunction& f, double lambda0) {
  Eigen::Map<const Eigen::VectorXd> v(f.values.data(), f.size());
  return holder_norm(Eigen::MatrixXd(v), f.grid, lambda0);
}

}  // namespace fbm_bismut
