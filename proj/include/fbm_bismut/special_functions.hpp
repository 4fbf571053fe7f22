#pragma once

#include <cmath>
#include <numbers>

#include "fbm_bismut/errors.hpp"

namespace fbm_bismut {

inline double gamma_fn(double x) {
  double g = std::tgamma(x);
  if (!std::isfinite(g)) throw InvalidArgument("gamma_fn: pole or overflow");
  return g;
}

inline double beta_fn(double a, double b) {
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

namespace detail {

inline bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::nearbyint(x);
}

// Plain Gauss series; caller guarantees |z| <= 1/2 or termination.
inline double hyp2f1_series(double a, double b, double c, double z) {
  double term = 1.0;
  double sum = 1.0;
  int small = 0;
  for (int k = 0; k < 4000; ++k) {
    term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
    sum += term;
    if (term == 0.0) return sum;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) {
      if (++small == 2) return sum;
    } else {
      small = 0;
    }
  }
  throw InvalidArgument("hyp2f1: series did not converge");
}

}  // namespace detail

// Gauss hypergeometric 2F1(a,b;c;z) for real z < 1 with fixed parameters.
// Negative z is mapped by Pfaff, z -> z/(z-1), onto [0,1); arguments above 1/2
// use the 1-z connection formula so the series always runs in |x| <= 1/2.
class Hyp2F1 {
 public:
  Hyp2F1(double a, double b, double c) : a_(a), b_(b), c_(c) {
    if (detail::is_nonpositive_integer(c)) throw InvalidArgument("Hyp2F1: c is a pole");
    terminating_ = detail::is_nonpositive_integer(a) || detail::is_nonpositive_integer(b);
    // Parameters after the Pfaff step: F(a, c-b; c; w).
    pb_ = c - b;
    double s = c - a - pb_;  // = b - a
    // Connection on the Pfaff image; s is the exponent gap c-A-B.
    gap_ = s;
    connect_ok_ = std::abs(s - std::nearbyint(s)) > 1e-9;
    if (connect_ok_ && !detail::is_nonpositive_integer(a) && !detail::is_nonpositive_integer(pb_)) {
      g1_ = std::tgamma(c) * std::tgamma(s) / (std::tgamma(c - a) * std::tgamma(c - pb_));
      g2_ = std::tgamma(c) * std::tgamma(-s) / (std::tgamma(a) * std::tgamma(pb_));
    }
    // Same data for the direct branch 0 <= z < 1 with (a, b).
    dgap_ = c - a - b;
    dconnect_ok_ = std::abs(dgap_ - std::nearbyint(dgap_)) > 1e-9;
    if (dconnect_ok_ && !terminating_) {
      dg1_ = std::tgamma(c) * std::tgamma(dgap_) / (std::tgamma(c - a) * std::tgamma(c - b));
      dg2_ = std::tgamma(c) * std::tgamma(-dgap_) / (std::tgamma(a) * std::tgamma(b));
    }
  }

  double operator()(double z) const {
    if (!std::isfinite(z) || z >= 1.0) throw InvalidArgument("Hyp2F1: need finite z < 1");
    if (terminating_ && std::abs(z) <= 1.0) return detail::hyp2f1_series(a_, b_, c_, z);
    if (z >= 0.0) return unit_interval(a_, b_, z, 1.0 - z, dconnect_ok_, dgap_, dg1_, dg2_);
    // w = z/(z-1) and 1-w = 1/(1-z), the latter kept exact for z -> -infinity.
    double x = 1.0 / (1.0 - z);
    return std::pow(1.0 - z, -a_) * unit_interval(a_, pb_, -z * x, x, connect_ok_, gap_, g1_, g2_);
  }

 private:
  double unit_interval(double a, double b, double w, double x, bool ok, double gap, double g1,
                       double g2) const {
    if (w <= 0.5) return detail::hyp2f1_series(a, b, c_, w);
    if (detail::is_nonpositive_integer(a) || detail::is_nonpositive_integer(b))
      return detail::hyp2f1_series(a, b, c_, w);
    if (!ok) throw InvalidArgument("Hyp2F1: integer exponent gap near z = 1 is not supported");
    double t1 = g1 * detail::hyp2f1_series(a, b, 1.0 - gap, x);
    double t2 = g2 * std::pow(x, gap) * detail::hyp2f1_series(c_ - a, c_ - b, 1.0 + gap, x);
    return t1 + t2;
  }

  double a_, b_, c_;
  double pb_ = 0, gap_ = 0, g1_ = 0, g2_ = 0;
  double dgap_ = 0, dg1_ = 0, dg2_ = 0;
  bool terminating_ = false;
  bool connect_ok_ = false;
  bool dconnect_ok_ = false;
};

inline double hyp2f1(double a, double b, double c, double z) { return Hyp2F1(a, b, c)(z); }

}  // namespace fbm_bismut
