#pragma once

// Grid-level identity checks for the kernel and fractional operators. Each check
// returns a nonnegative discrepancy together with the tolerance it is judged by.

#include <cmath>
#include <string>
#include <vector>

#include "fbm_bismut/fbm_operators.hpp"
#include "fbm_bismut/fractional_calculus.hpp"
#include "fbm_bismut/grid.hpp"

namespace fbm_bismut {

struct OperatorCheck {
  std::string name;
  double hurst = 0.0;       // H, or the fractional order for the order checks
  int intervals = 0;
  double value = 0.0;      // discrepancy (relative error, or order shortfall)
  double tolerance = 0.0;
  double order = std::nan("");  // observed grid-convergence order, for order checks
  bool passed() const { return value <= tolerance; }
};

// max over probe pairs of |<K* 1_[0,t], K* 1_[0,s]> - R(t,s)| / R(t,s), with t, s
// on `probes` evenly spaced nodes and K* applied to indicator steps.
inline OperatorCheck isometry_check(Hurst hurst, int n, const KernelTable& table, int probes = 8) {
  const Grid& g = table.grid();
  std::vector<int> idx;
  for (int p = 1; p <= probes; ++p) idx.push_back(std::max(1, p * n / probes));
  std::vector<L2Image> img;
  for (int m : idx) {
    std::vector<double> phi(g.size(), 0.0);
    for (int i = 0; i < m; ++i) phi[i] = 1.0;
    img.push_back(kh_star_image(table, GridFunction(g, phi)));
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      double r = covariance(hurst, g.node(idx[a]), g.node(idx[b]));
      worst = std::max(worst, std::abs(img[a].inner(img[b]) - r) / r);
    }
  return {"isometry", hurst.value(), n, worst, 1e-3};
}

// Gram matrix of the kernel rows against R_H at all node pairs.
inline OperatorCheck covariance_reconstruction_check(Hurst hurst, int n, const KernelTable& table) {
  const Grid& g = table.grid();
  Eigen::MatrixXd gram = table.gram();
  double worst = 0.0;
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= j; ++k) {
      double r = covariance(hurst, g.node(j), g.node(k));
      worst = std::max(worst, std::abs(gram(j, k) - r) / r);
    }
  return {"covariance_reconstruction", hurst.value(), n, worst, 1e-3};
}

namespace detail {

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// sup-norm error of D^a(I^a f) - f on [0,1] with n cells, f(x) = sin(3x) + x^2.
inline double derivative_of_integral_error(double a, int n) {
  Grid g(0.0, 1.0, n);
  GridFunction f = GridFunction::sample(g, [](double x) { return std::sin(3.0 * x) + x * x; });
  GridFunction i = left_frac_integral(f, FracOrder(a));
  GridFunction d = left_frac_derivative(i, FracOrder(a));
  return max_abs_diff(d.values, f.values);
}

// sup-norm error of I^a(I^b f) against the exact I^(a+b) f for f(x) = x^2.
inline double composition_error(double a, double b, int n) {
  Grid g(0.0, 1.0, n);
  GridFunction f = GridFunction::sample(g, [](double x) { return x * x; });
  GridFunction c = left_frac_integral(left_frac_integral(f, FracOrder(b)), FracOrder(a));
  double s = a + b;
  GridFunction exact =
      GridFunction::sample(g, [s](double x) { return 2.0 / std::tgamma(3.0 + s) * std::pow(x, 2.0 + s); });
  return max_abs_diff(c.values, exact.values);
}

}  // namespace detail

// Observed order log2(e(n/2) / e(n)); the check value is the shortfall max(0, 1 - order).
inline OperatorCheck derivative_of_integral_order(double a, int n) {
  double e1 = detail::derivative_of_integral_error(a, n / 2);
  double e2 = detail::derivative_of_integral_error(a, n);
  double order = std::log2(e1 / e2);
  return {"derivative_of_integral_order", a, n, std::max(0.0, 1.0 - order), 0.0, order};
}

inline OperatorCheck composition_order(double a, double b, int n) {
  double e1 = detail::composition_error(a, b, n / 2);
  double e2 = detail::composition_error(a, b, n);
  double order = std::log2(e1 / e2);
  return {"composition_order", a + b, n, std::max(0.0, 1.0 - order), 0.0, order};
}

// K_H(K_H^-1 F) = F for F(t) = int_0^t rho with rho(s) = s cos(s) (so rho(0) = 0).
inline OperatorCheck inversion_check(Hurst hurst, int n, const KernelTable& table) {
  const Grid& g = table.grid();
  GridFunction rho = GridFunction::sample(g, [](double s) { return s * std::cos(s); });
  GridFunction big = GridFunction::sample(g, [](double t) { return std::cos(t) + t * std::sin(t) - 1.0; });
  GridFunction inv = apply_kh_inverse(hurst, big, rho);
  GridFunction back = apply_kh_forward(table, inv);
  double worst = 0.0, scale = 0.0;
  for (int k = 1; k <= n; ++k) {
    worst = std::max(worst, std::abs(back.values[k] - big.values[k]));
    scale = std::max(scale, std::abs(big.values[k]));
  }
  return {"inversion", hurst.value(), n, worst / scale, 1e-3};
}

// The full suite for one H at resolution n.
inline std::vector<OperatorCheck> validate_operators(Hurst hurst, int n) {
  Grid g(0.0, 1.0, n);
  KernelTable table(hurst, g);
  std::vector<OperatorCheck> out;
  out.push_back(isometry_check(hurst, n, table));
  out.push_back(covariance_reconstruction_check(hurst, n, table));
  out.push_back(inversion_check(hurst, n, table));
  double a = std::abs(hurst.value() - 0.5);
  if (a == 0.0) a = 0.25;
  out.push_back(derivative_of_integral_order(a, n));
  out.push_back(composition_order(a, 1.0 - a, n));
  return out;
}

}  // namespace fbm_bismut
