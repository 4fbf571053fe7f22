#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <vector>

#include "fbm_bismut/errors.hpp"

namespace fbm_bismut {

// Gauss-Legendre rule mapped to (0,1).
struct Rule01 {
  std::vector<double> x;
  std::vector<double> w;
};

namespace detail {

template <unsigned N>
Rule01 gauss01() {
  using G = boost::math::quadrature::gauss<double, N>;
  Rule01 r;
  const auto& a = G::abscissa();
  const auto& wt = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      r.x.push_back(0.5);
      r.w.push_back(0.5 * wt[i]);
      continue;
    }
    r.x.push_back(0.5 * (1.0 - a[i]));
    r.w.push_back(0.5 * wt[i]);
    r.x.push_back(0.5 * (1.0 + a[i]));
    r.w.push_back(0.5 * wt[i]);
  }
  return r;
}

}  // namespace detail

inline const Rule01& gauss_legendre01(int points) {
  static const Rule01 r7 = detail::gauss01<7>();
  static const Rule01 r10 = detail::gauss01<10>();
  static const Rule01 r15 = detail::gauss01<15>();
  static const Rule01 r20 = detail::gauss01<20>();
  switch (points) {
    case 7: return r7;
    case 10: return r10;
    case 15: return r15;
    case 20: return r20;
    default: throw InvalidArgument("gauss_legendre01: supported sizes are 7, 10, 15, 20");
  }
}

enum class Grading { None, TowardStart, TowardEnd };

// Appends the nodes/weights of one panel [a,b]; grading u -> u^p clusters nodes
// at an endpoint so that algebraic endpoint singularities integrate accurately.
inline void append_panel(double a, double b, Grading grading, double p, const Rule01& rule,
                         std::vector<double>& nodes, std::vector<double>& weights) {
  double len = b - a;
  for (std::size_t q = 0; q < rule.x.size(); ++q) {
    double u = rule.x[q];
    if (grading == Grading::None) {
      nodes.push_back(a + len * u);
      weights.push_back(len * rule.w[q]);
      continue;
    }
    double up = std::pow(u, p);
    double jac = len * p * std::pow(u, p - 1.0) * rule.w[q];
    double r = grading == Grading::TowardStart ? a + len * up : b - len * up;
    // Keep nodes strictly inside the panel; the clustered end node can round onto it.
    if (r <= a) r = std::nextafter(a, b);
    if (r >= b) r = std::nextafter(b, a);
    nodes.push_back(r);
    weights.push_back(jac);
  }
}

}  // namespace fbm_bismut
