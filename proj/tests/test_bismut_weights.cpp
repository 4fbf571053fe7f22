#include <gtest/gtest.h>

#include <cmath>

#include "fbm_bismut/bismut_weights.hpp"

using namespace fbm_bismut;

namespace {

ModelSpec scalar_model(Drift drift, double h, double x0 = 0.3) {
  ModelSpec m;
  m.dim = 1;
  m.drift = std::move(drift);
  m.diffusion = identity_diffusion(1);
  m.hurst = Hurst(h);
  m.x0 = Vec::Constant(1, x0);
  return m;
}

double relative_l2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / b.norm();
}

WeightPlan plan_for(const ModelSpec& m, int n, std::uint64_t seed) {
  Grid g(0.0, m.horizon, n);
  SolutionPath p = solve_euler(m, sample_fbm(m.hurst, g, seed, m.dim));
  return make_weight_plan(m, p, Vec::Ones(m.dim));
}

}  // namespace

TEST(CutoffGamma, EndpointsAndDerivative) {
  CutoffGamma g(0.25, 1.0);
  EXPECT_EQ(g.value(-0.1), 1.0);
  EXPECT_EQ(g.value(0.0), 1.0);
  EXPECT_EQ(g.value(0.75), 0.0);
  EXPECT_EQ(g.value(1.0), 0.0);
  const double t = 0.3, e = 1e-6;
  EXPECT_NEAR(g.derivative(t), (g.value(t + e) - g.value(t - e)) / (2 * e), 1e-8);
  EXPECT_THROW(CutoffGamma(1.0, 1.0), InvalidArgument);
}

TEST(Integrand, ExplicitAndGenericRoutesAgree) {
  for (auto drift : {linear_drift(1.0, 1), tanh_bounded_drift(1.0, 1.0, 1)}) {
    WeightPlan plan = plan_for(scalar_model(drift, 0.7), 256, 12);
    EXPECT_LT(relative_l2(khstar_h_explicit(plan).values, khstar_h_generic(plan).values), 1e-3) << drift.name;
  }
}

TEST(Integrand, LowHAndGenericRoutesAgree) {
  WeightPlan plan = plan_for(scalar_model(tanh_bounded_drift(1.0, 1.0, 1), 0.3), 256, 12);
  EXPECT_LT(relative_l2(khstar_h_lowH(plan).values, khstar_h_generic(plan).values), 1e-2);
}

TEST(Integrand, RouteRestrictions) {
  WeightPlan low = plan_for(scalar_model(zero_drift(1), 0.3), 32, 1);
  WeightPlan high = plan_for(scalar_model(zero_drift(1), 0.7), 32, 1);
  EXPECT_THROW(khstar_h_explicit(low), InvalidArgument);
  EXPECT_THROW(khstar_h_lowH(high), InvalidArgument);
  ModelSpec holder = scalar_model(zero_drift(1), 0.3);
  holder.diffusion = diag_holder_diffusion(1, 1.0);
  EXPECT_EQ(default_route(holder), WeightRoute::Generic);
  EXPECT_EQ(default_route(scalar_model(zero_drift(1), 0.3)), WeightRoute::LowH);
}

TEST(Integrand, CovfactorNoiseIsRejected) {
  ModelSpec m = scalar_model(zero_drift(1), 0.7);
  Grid g(0.0, 1.0, 16);
  SolutionPath p = solve_euler(m, sample_fbm(m.hurst, g, 1, 1, Provenance::CovFactor));
  EXPECT_THROW(make_weight_plan(m, p, Vec::Ones(1)), InvalidArgument);
}

TEST(SingularCellCorrection, OnlyForHighH) {
  Grid g(0.0, 1.0, 16);
  EXPECT_FALSE(SingularCellCorrection(Hurst(0.3), g).active());
  SingularCellCorrection c(Hurst(0.7), g);
  ASSERT_TRUE(c.active());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(17, 1);
  c.apply(Eigen::RowVectorXd::Ones(1), phi);
  EXPECT_EQ(phi(0, 0), 0.0);
  EXPECT_EQ(phi(16, 0), 0.0);
  // The cell average of s^-a lies below the left-point value.
  for (int i = 1; i < 16; ++i) EXPECT_LT(phi(i, 0), 0.0);
}

TEST(BismutGradient, ZeroDriftCoordinate) {
  for (double h : {0.3, 0.7}) {
    GradientOptions opt;
    opt.intervals = 64;
    opt.mc = McOptions{4000, 21, 1};
    ModelSpec m = scalar_model(zero_drift(1), h);
    EstimateReport r = bismut_gradient(m, coordinate_function(0), m.x0, Vec::Ones(1), opt);
    EXPECT_NEAR(r.estimate, 1.0, 3.5 * r.standard_error) << h;
    EXPECT_NEAR(r.weight_mean, 0.0, 3.5 * r.weight_se) << h;
  }
}

TEST(BismutGradient, WorkerCountDoesNotChangeBits) {
  ModelSpec m = scalar_model(tanh_bounded_drift(1.0, 1.0, 1), 0.7);
  GradientOptions opt;
  opt.intervals = 32;
  opt.mc = McOptions{500, 77, 1};
  EstimateReport a = bismut_gradient(m, one_plus_tanh_function(0), m.x0, Vec::Ones(1), opt);
  opt.mc.workers = 3;
  EstimateReport b = bismut_gradient(m, one_plus_tanh_function(0), m.x0, Vec::Ones(1), opt);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.standard_error, b.standard_error);
}

TEST(ShiftTest, LinearDefectIsRoundoff) {
  ModelSpec m = scalar_model(linear_drift(1.0, 1), 0.7);
  ShiftTestReport r = cameron_martin_shift_test(m, m.x0, Vec::Ones(1), {1e-2, 5e-3}, 4, 128);
  for (const auto& row : r.rows) EXPECT_LE(row.defect, 1e-12 * r.scale);
}

TEST(ShiftTest, TanhRatiosNearFour) {
  for (double h : {0.3, 0.7}) {
    ModelSpec m = scalar_model(tanh_bounded_drift(1.0, 1.0, 1), h);
    ShiftTestReport r = cameron_martin_shift_test(m, m.x0, Vec::Ones(1), {1e-2, 5e-3, 2.5e-3}, 4, 128);
    for (double q : r.ratios) {
      EXPECT_GE(q, 3.2) << h;
      EXPECT_LE(q, 4.8) << h;
    }
  }
}

TEST(ShiftTest, RejectsLargeEps) {
  ModelSpec m = scalar_model(zero_drift(1), 0.7);
  EXPECT_THROW(cameron_martin_shift_test(m, m.x0, Vec::Ones(1), {0.5}, 1, 16), InvalidArgument);
}
