#include <gtest/gtest.h>

#include <cmath>

#include "fbm_bismut/verification_oracles.hpp"

using namespace fbm_bismut;

TEST(AdaptiveIntegral, EndpointSingularity) {
  // int_0^1 x^-0.5 dx = 2.
  OracleResult r = adaptive_integral([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10);
  EXPECT_NEAR(r.value, 2.0, 1e-10);
  EXPECT_EQ(r.method, OracleMethod::Quad);
}

TEST(QuadFracIntegral, PowerFunction) {
  // I^a x^2 at x = 1.5 equals 2 x^(2+a) / Gamma(3+a).
  double a = 0.3, x = 1.5;
  OracleResult r = quad_frac_integral([](double y) { return y * y; }, a, x, 1e-11);
  EXPECT_NEAR(r.value, 2.0 * std::pow(x, 2.0 + a) / std::tgamma(3.0 + a), 1e-10);
}

TEST(LinearFlow, MatrixExponential) {
  Mat a(2, 2);
  a << 0.0, 1.0, -1.0, 0.0;  // rotation generator
  Vec x(2);
  x << 1.0, 0.0;
  Vec y = linear_model_flow(a, x, 0.5);
  EXPECT_NEAR(y[0], std::cos(0.5), 1e-14);
  EXPECT_NEAR(y[1], -std::sin(0.5), 1e-14);
}

TEST(MethodOfSteps, PiecewisePolynomialSolution) {
  // z' = -z(t - 1), z = 1 on [-1, 0]: z(t) = 1 - t on [0, 1], 1 - t + (t - 1)^2 / 2 on [1, 2].
  DelayOde ode{1, 1.0, [](const Vec&, const Vec& lag) { return Vec(-lag); }, [](double) { return Vec::Ones(1); }};
  StepsSolution s = method_of_steps(ode, 2.0, 400);
  EXPECT_NEAR(steps_value(s, 0.5).value, 0.5, 1e-12);
  EXPECT_NEAR(steps_value(s, 1.5).value, -0.5 + 0.125, 1e-10);
  EXPECT_NEAR(steps_value(s, 2.0).value, -0.5, 1e-10);
}

TEST(FdGradient, ZeroDriftCoordinate) {
  ModelSpec m;
  m.dim = 1;
  m.drift = zero_drift(1);
  m.diffusion = identity_diffusion(1);
  m.hurst = Hurst(0.7);
  m.x0 = Vec::Zero(1);
  FdOptions opt{64, McOptions{2000, 1, 1}};
  OracleResult r = fd_gradient(m, coordinate_function(0), m.x0, Vec::Ones(1), 1e-3, opt);
  EXPECT_EQ(r.method, OracleMethod::FdCrn);
  // X(T) is exactly x + B(T), so CRN differences are deterministic.
  EXPECT_NEAR(r.value, 1.0, 1e-9);
}

TEST(FdGradient, RejectsStepOutsideRange) {
  ModelSpec m;
  m.dim = 1;
  m.drift = zero_drift(1);
  m.diffusion = identity_diffusion(1);
  m.x0 = Vec::Zero(1);
  FdOptions opt{16, McOptions{10, 1, 1}};
  EXPECT_THROW(fd_gradient(m, coordinate_function(0), m.x0, Vec::Ones(1), 1.0, opt), InvalidArgument);
}
