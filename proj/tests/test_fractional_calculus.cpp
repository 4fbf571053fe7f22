#include <gtest/gtest.h>

#include <cmath>

#include "fbm_bismut/fractional_calculus.hpp"
#include "fbm_bismut/operator_checks.hpp"
#include "fbm_bismut/special_functions.hpp"
#include "fbm_bismut/verification_oracles.hpp"

using namespace fbm_bismut;

namespace {
double test_fn(double x) { return std::sin(3.0 * x) + x * x; }
}  // namespace

TEST(Hyp2F1, MatchesReferenceValues) {
  // Reference values from an arbitrary-precision evaluation.
  EXPECT_NEAR(hyp2f1(0.2, -0.2, 1.2, -3.0), 1.0678103556487223, 1e-13);
  EXPECT_NEAR(hyp2f1(-0.2, 0.2, 0.8, -0.5), 1.0222776980360312, 1e-13);
  EXPECT_NEAR(hyp2f1(0.5, 0.3, 1.7, 0.6), 1.0702646241447829, 1e-13);
}

TEST(Hyp2F1, PolynomialCaseTerminates) {
  // F(-2, b; c; z) = 1 - 2bz/c + b(b+1)z^2/(c(c+1)).
  double b = 0.7, c = 1.3, z = -4.0;
  double exact = 1.0 - 2.0 * b * z / c + b * (b + 1) * z * z / (c * (c + 1));
  EXPECT_NEAR(hyp2f1(-2.0, b, c, z), exact, 1e-12);
}

TEST(FracIntegral, MatchesQuadratureOracle) {
  Grid g(0.0, 1.0, 512);
  GridFunction f = GridFunction::sample(g, test_fn);
  GridFunction i = left_frac_integral(f, FracOrder(0.35));
  EXPECT_NEAR(i.values.back(), 1.2628803011494823, 2e-5);
  OracleResult q = quad_frac_integral(test_fn, 0.35, 1.0, 1e-10);
  EXPECT_NEAR(q.value, 1.2628803011494823, 1e-9);
}

TEST(FracIntegral, PowerFunctionExact) {
  // I^a x = x^(1+a) / Gamma(2+a); piecewise-linear interpolation is exact for linear f.
  Grid g(0.0, 2.0, 64);
  GridFunction f = GridFunction::sample(g, [](double x) { return x; });
  double a = 0.6;
  GridFunction i = left_frac_integral(f, FracOrder(a));
  for (int k = 0; k < g.size(); ++k)
    EXPECT_NEAR(i[k], std::pow(g.node(k), 1.0 + a) / std::tgamma(2.0 + a), 1e-12);
}

TEST(FracIntegral, RightIsMirrorOfLeft) {
  Grid g(0.0, 1.0, 128);
  GridFunction f = GridFunction::sample(g, test_fn);
  GridFunction mirrored = GridFunction::sample(g, [](double x) { return test_fn(1.0 - x); });
  GridFunction r = right_frac_integral(f, FracOrder(0.4));
  GridFunction l = left_frac_integral(mirrored, FracOrder(0.4));
  for (int k = 0; k < g.size(); ++k) EXPECT_NEAR(r[k], l[g.size() - 1 - k], 1e-13);
}

TEST(FracDerivative, InvertsIntegralWithFirstOrderConvergence) {
  for (double a : {0.2, 0.5, 0.8}) {
    OperatorCheck c = derivative_of_integral_order(a, 512);
    EXPECT_GE(c.order, 1.0) << "a = " << a;
  }
}

TEST(FracDerivative, StrictOriginPolicyRejectsNonzeroStart) {
  Grid g(0.0, 1.0, 32);
  GridFunction f = GridFunction::sample(g, [](double x) { return 1.0 + x; });
  EXPECT_THROW(left_frac_derivative(f, FracOrder(0.3)), InsufficientRegularity);
  GridFunction d = left_frac_derivative(f, FracOrder(0.3), OriginPolicy::Interior);
  EXPECT_EQ(d[0], 0.0);
}

TEST(FracIntegral, SemigroupProperty) {
  OperatorCheck c = composition_order(0.3, 0.7, 512);
  EXPECT_GE(c.order, 1.0);
  EXPECT_LT(detail::composition_error(0.3, 0.45, 512), 1e-4);
}

TEST(FracIntegral, RejectsNonpositiveOrder) {
  EXPECT_THROW(FracIntegralWeights(0.0, 0.1, 10), InvalidArgument);
  EXPECT_THROW(FracIntegralWeights(-0.5, 0.1, 10), InvalidArgument);
}
