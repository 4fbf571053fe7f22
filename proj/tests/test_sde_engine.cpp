#include <gtest/gtest.h>

#include <cmath>

#include "fbm_bismut/sde_engine.hpp"
#include "fbm_bismut/verification_oracles.hpp"

using namespace fbm_bismut;

namespace {

ModelSpec scalar_model(Drift drift, double h = 0.7, double x0 = 0.4) {
  ModelSpec m;
  m.dim = 1;
  m.drift = std::move(drift);
  m.diffusion = identity_diffusion(1);
  m.hurst = Hurst(h);
  m.x0 = Vec::Constant(1, x0);
  return m;
}

FbmPath silent_noise(const Grid& g, int dim = 1) {
  return FbmPath{g, Eigen::MatrixXd::Zero(g.size(), dim), Provenance::Volterra, std::nullopt};
}

FunctionalModelSpec delay_model(double kappa) {
  FunctionalModelSpec m;
  m.dim = 1;
  m.drift = delay_linear_drift(kappa);
  m.diffusion = identity_diffusion(1);
  m.hurst = Hurst(0.7);
  m.horizon = 1.0;
  m.delay = 0.25;
  m.history = [](double) { return Vec::Ones(1); };
  return m;
}

}  // namespace

TEST(Euler, ZeroDriftIsShiftedNoise) {
  ModelSpec m = scalar_model(zero_drift(1));
  Grid g(0.0, 1.0, 64);
  FbmPath b = sample_fbm(m.hurst, g, 3);
  SolutionPath p = solve_euler(m, b);
  EXPECT_LT((p.values.array() - m.x0[0] - b.values.array()).abs().maxCoeff(), 1e-14);
}

TEST(Euler, LinearDriftWithoutNoiseIsGeometric) {
  ModelSpec m = scalar_model(linear_drift(1.0, 1));
  Grid g(0.0, 1.0, 100);
  SolutionPath p = solve_euler(m, silent_noise(g));
  EXPECT_NEAR(p.terminal()[0], 0.4 * std::pow(0.99, 100), 1e-14);
}

TEST(Euler, DerivativeFlowOfLinearDrift) {
  ModelSpec m = scalar_model(linear_drift(2.0, 1));
  Grid g(0.0, 1.0, 50);
  SolutionPath p = solve_euler(m, sample_fbm(m.hurst, g, 1));
  GridPath j = derivative_flow(m, p, Vec::Constant(1, 1.5));
  for (int k = 0; k <= 50; ++k) EXPECT_NEAR(j.values(k, 0), 1.5 * std::pow(1.0 - 2.0 * 0.02, k), 1e-13);
}

TEST(Euler, DerivativeFlowMatchesFiniteDifferenceOnTanh) {
  ModelSpec m = scalar_model(tanh_bounded_drift(1.0, 2.0, 1));
  Grid g(0.0, 1.0, 128);
  FbmPath b = sample_fbm(m.hurst, g, 8);
  EulerSolver solver(m, g);
  Eigen::MatrixXd up, dn;
  const double e = 1e-6;
  solver.solve(b.values, m.x0 + Vec::Constant(1, e), up);
  solver.solve(b.values, m.x0 - Vec::Constant(1, e), dn);
  GridPath j = derivative_flow(m, solve_euler(m, b), Vec::Ones(1));
  EXPECT_NEAR(j.values(128, 0), (up(128, 0) - dn(128, 0)) / (2 * e), 1e-7);
}

TEST(Picard, IteratesConvergeToTrapezoidFixedPoint) {
  ModelSpec m = scalar_model(tanh_bounded_drift(1.0, 1.0, 1));
  Grid g(0.0, 1.0, 256);
  FbmPath b = sample_fbm(m.hurst, g, 4);
  auto it = picard_iterates(m, b, 25);
  double d_early = (it[5] - it[4]).cwiseAbs().maxCoeff();
  double d_late = (it[25] - it[24]).cwiseAbs().maxCoeff();
  EXPECT_LT(d_late, 1e-12);
  EXPECT_LT(d_late, d_early);
  // The fixed point and the Euler path are both first-order accurate.
  SolutionPath e = solve_euler(m, b);
  EXPECT_LT((it.back() - e.values).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(Euler, RejectsDimensionMismatch) {
  ModelSpec m = scalar_model(zero_drift(1));
  Grid g(0.0, 1.0, 16);
  EXPECT_THROW(solve_euler(m, sample_fbm(m.hurst, g, 1, 2)), InvalidArgument);
}

TEST(HolderBound, FiniteAndPositive) {
  ModelSpec m = scalar_model(tanh_bounded_drift(1.0, 1.0, 1));
  Grid g(0.0, 1.0, 128);
  SolutionPath p = solve_euler(m, sample_fbm(m.hurst, g, 2));
  double c = holder_bound_constant(p, 0.6);
  EXPECT_GT(c, 0.0);
  EXPECT_TRUE(std::isfinite(c));
  // Lipschitz drift bounded by 1 and unit diffusion: the constant stays of order one.
  EXPECT_LT(c, 2.0);
}

TEST(Sfde, NoiselessSolutionTracksMethodOfSteps) {
  FunctionalModelSpec m = delay_model(1.0);
  Grid g(0.0, 1.0, 400);
  SolutionPath p = solve_sfde(m, silent_noise(g));
  DelayOde ode{1, 0.25, [](const Vec&, const Vec& lag) { return Vec(-lag); },
               [](double) { return Vec::Ones(1); }};
  StepsSolution s = method_of_steps(ode, 1.0);
  EXPECT_NEAR(p.terminal()[0], steps_value(s, 1.0).value, 5e-3);
  // On [0, r0] the solution is 1 - t.
  EXPECT_NEAR(p.values(p.origin + 100, 0), 0.75, 1e-12);
}

TEST(Sfde, HistoryIsCopied) {
  FunctionalModelSpec m = delay_model(1.0);
  Grid g(0.0, 1.0, 64);
  SolutionPath p = solve_sfde(m, sample_fbm(m.hurst, g, 6));
  EXPECT_EQ(p.origin, 16);
  for (int k = 0; k <= p.origin; ++k) EXPECT_EQ(p.values(k, 0), 1.0);
}
