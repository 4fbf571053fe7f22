#pragma once

// Riemann-Liouville fractional integrals and Weyl-form derivatives on uniform grids.
//
// Both operators use product integration: the grid function is interpolated
// linearly on each cell and integrated exactly against the power weight, so the
// weights depend only on the lag m = k - j and are tabulated once per (alpha, n).
// Right-sided operators are the real mirror images of the left-sided ones; the
// complex phase (-1)^alpha of the textbook definition is dropped.

#include <cmath>
#include <vector>

#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/grid.hpp"
#include "fbm_bismut/special_functions.hpp"

namespace fbm_bismut {

struct FracOrder {
  double alpha;
  explicit FracOrder(double a) : alpha(a) {}
};

// What a derivative does at the left endpoint when f(a) != 0.
enum class OriginPolicy {
  Strict,   // raise InsufficientRegularity
  Interior  // report 0 at t_0 and evaluate the interior nodes
};

inline constexpr double kOverflowGuard = 1e12;

// I^alpha on a uniform grid with spacing h: out_k = sum_{j<k} L[k-j] f_j + R[k-j] f_{j+1}.
class FracIntegralWeights {
 public:
  FracIntegralWeights(double alpha, double h, int n) : alpha_(alpha), left_(n + 1), right_(n + 1) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw InvalidArgument("fractional integral: alpha must be positive");
    double scale = std::pow(h, alpha) / gamma_fn(alpha + 1.0);
    for (int m = 1; m <= n; ++m) {
      // Exact moments of (m - u)^(alpha-1) against the two hat functions on [m-1, m].
      double p0 = std::pow(m, alpha) - std::pow(m - 1, alpha);
      double p1 = (std::pow(m, alpha + 1) - std::pow(m - 1, alpha + 1)) / (alpha + 1);
      // p0 carries 1/alpha implicitly through the Gamma(alpha+1) scale.
      left_[m] = scale * (p1 * alpha - (m - 1) * p0);
      right_[m] = scale * (m * p0 - p1 * alpha);
    }
  }

  double alpha() const { return alpha_; }
  int intervals() const { return static_cast<int>(left_.size()) - 1; }

  // Strided input/output so matrix columns can be processed in place.
  void apply(const double* f, double* out, int n, std::ptrdiff_t stride = 1) const {
    out[0] = 0.0;
    for (int k = 1; k <= n; ++k) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) {
        int m = k - j;
        acc += left_[m] * f[j * stride] + right_[m] * f[(j + 1) * stride];
      }
      out[k * stride] = acc;
    }
  }

 private:
  double alpha_;
  std::vector<double> left_;
  std::vector<double> right_;
};

// Weyl form D^alpha f(x) = [f(x)(x-a)^-alpha + alpha int_a^x (f(x)-f(y))(x-y)^(-alpha-1) dy] / Gamma(1-alpha).
class FracDerivativeWeights {
 public:
  FracDerivativeWeights(double alpha, double h, int n)
      : alpha_(alpha), h_(h), a_(n + 1), b_(n + 1), boundary_(n + 1) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw InvalidArgument("fractional derivative: alpha must lie in (0,1)");
    double g = gamma_fn(1.0 - alpha);
    double hs = std::pow(h, -alpha);
    // alpha * Q0 and Q1 below are the exact moments of (m-u)^(-alpha-1) against
    // the linear pieces of f(x)-f(y) on cell [m-1, m] in lag units.
    for (int m = 1; m <= n; ++m) {
      if (m == 1) {
        a_[1] = hs * alpha / (1.0 - alpha) / g;
        b_[1] = 0.0;
      } else {
        double q0 = std::pow(m - 1, -alpha) - std::pow(m, -alpha);  // alpha * Q0
        double q1 = (std::pow(m, 1.0 - alpha) - std::pow(m - 1, 1.0 - alpha)) / (1.0 - alpha);
        a_[m] = hs * alpha * (q1 - (m - 1) * q0 / alpha) / g;
        b_[m] = hs * alpha * (m * q0 / alpha - q1) / g;
      }
      boundary_[m] = std::pow(m * h, -alpha) / g;
    }
  }

  double alpha() const { return alpha_; }
  // Coefficients of f(x)-f(y_j) and f(x)-f(y_{j+1}) at lag m = k - j (Gamma factor included).
  double lag_weight_a(int m) const { return a_[m]; }
  double lag_weight_b(int m) const { return b_[m]; }

  void apply(const double* f, double* out, int n, std::ptrdiff_t stride = 1,
             OriginPolicy policy = OriginPolicy::Strict) const {
    if (f[0] != 0.0 && policy == OriginPolicy::Strict)
      throw InsufficientRegularity(
          "fractional derivative: f(a) != 0 makes the boundary term diverge at t_0");
    out[0] = 0.0;
    for (int k = 1; k <= n; ++k) {
      double fk = f[k * stride];
      double acc = fk * boundary_[k];
      for (int j = 0; j < k; ++j) {
        int m = k - j;
        acc += a_[m] * (fk - f[j * stride]) + b_[m] * (fk - f[(j + 1) * stride]);
      }
      if (!(std::abs(acc) <= kOverflowGuard))
        throw InsufficientRegularity("fractional derivative: value exceeds overflow guard at node " +
                                     std::to_string(k));
      out[k * stride] = acc;
    }
  }

 private:
  double alpha_;
  double h_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> boundary_;
};

namespace detail {

inline std::vector<double> reversed(const std::vector<double>& v) {
  return std::vector<double>(v.rbegin(), v.rend());
}

}  // namespace detail

inline GridFunction left_frac_integral(const GridFunction& f, FracOrder alpha) {
  const Grid& g = f.grid;
  FracIntegralWeights w(alpha.alpha, g.step(), g.intervals());
  std::vector<double> out(g.size());
  w.apply(f.values.data(), out.data(), g.intervals());
  return GridFunction(g, std::move(out));
}

inline GridFunction right_frac_integral(const GridFunction& f, FracOrder alpha) {
  const Grid& g = f.grid;
  FracIntegralWeights w(alpha.alpha, g.step(), g.intervals());
  auto rev = detail::reversed(f.values);
  std::vector<double> out(g.size());
  w.apply(rev.data(), out.data(), g.intervals());
  return GridFunction(g, detail::reversed(out));
}

inline GridFunction left_frac_derivative(const GridFunction& f, FracOrder alpha,
                                         OriginPolicy policy = OriginPolicy::Strict) {
  const Grid& g = f.grid;
  FracDerivativeWeights w(alpha.alpha, g.step(), g.intervals());
  std::vector<double> out(g.size());
  w.apply(f.values.data(), out.data(), g.intervals(), 1, policy);
  return GridFunction(g, std::move(out));
}

inline GridFunction right_frac_derivative(const GridFunction& f, FracOrder alpha,
                                          OriginPolicy policy = OriginPolicy::Strict) {
  const Grid& g = f.grid;
  FracDerivativeWeights w(alpha.alpha, g.step(), g.intervals());
  auto rev = detail::reversed(f.values);
  std::vector<double> out(g.size());
  w.apply(rev.data(), out.data(), g.intervals(), 1, policy);
  return GridFunction(g, detail::reversed(out));
}

}  // namespace fbm_bismut
