#include <gtest/gtest.h>

#include <cmath>

#include "fbm_bismut/harnack_suite.hpp"

using namespace fbm_bismut;

namespace {

ModelSpec ou_model() {
  ModelSpec m;
  m.dim = 1;
  m.drift = linear_drift(1.0, 1);
  m.diffusion = identity_diffusion(1);
  m.hurst = Hurst(0.7);
  m.x0 = Vec::Zero(1);
  return m;
}

HarnackConfig base_config(ModelSpec m) {
  HarnackConfig c;
  c.model = m;
  c.f = one_plus_tanh_function(0);
  c.x = m.x0;
  c.direction = Vec::Ones(1);
  c.intervals = 64;
  c.mc = McOptions{6000, 31, 1};
  return c;
}

}  // namespace

TEST(LogRatio, DeterministicSamples) {
  std::vector<double> a{2.0, 2.0, 2.0}, b{4.0, 4.0, 4.0};
  auto r = detail::log_ratio(a, b, 2.0);
  EXPECT_NEAR(r.value, 0.0, 1e-15);
  EXPECT_NEAR(r.se, 0.0, 1e-15);
  auto g = detail::log_gap({std::log(3.0), std::log(3.0)}, {3.0, 3.0});
  EXPECT_NEAR(g.value, 0.0, 1e-15);
}

TEST(TiltConstant, DiscreteLinearApproachesContinuous) {
  // Terminal variance of the fractional OU process (H = 0.7, kappa = 1, T = 1) by
  // arbitrary-precision quadrature: 0.41490076124615175.
  const double continuous = gaussian_tilt_constant(1.0, 1.0, 0.41490076124615175);
  EXPECT_NEAR(continuous, 0.16309355860198237, 1e-14);
  auto c256 = linear_tilt_constant(ou_model(), 256);
  ASSERT_TRUE(c256.has_value());
  EXPECT_NEAR(*c256, continuous, 0.01 * continuous);
  ModelSpec tanh = ou_model();
  tanh.drift = tanh_bounded_drift(1.0, 1.0, 1);
  EXPECT_FALSE(linear_tilt_constant(tanh, 64).has_value());
}

TEST(Harnack, JensenBaselineAndFittedConstantOnLinearModel) {
  HarnackConfig c = base_config(ou_model());
  double exact = *linear_tilt_constant(c.model, c.intervals);
  for (double p : {2.0, 4.0}) {
    c.p = p;
    HarnackReport r = harnack_power_check(c);
    EXPECT_TRUE(r.jensen_ok);
    double q = p / (p - 1.0);
    for (const HarnackRow& row : r.rows) {
      if (row.family != "tilt") continue;
      double se = row.gap_se / (q * row.v_norm * row.v_norm);
      EXPECT_NEAR(row.constant, exact, 3.5 * se + 1e-3) << "p " << p << " |v| " << row.v_norm;
    }
    EXPECT_LE(r.stability_ratio, 2.0);
  }
}

TEST(LogHarnack, StableFittedConstant) {
  HarnackConfig c = base_config(ou_model());
  c.model.drift = tanh_bounded_drift(1.0, 1.0, 1);
  HarnackReport r = log_harnack_check(c);
  EXPECT_TRUE(r.jensen_ok);
  ASSERT_EQ(r.fitted.size(), 3u);
  EXPECT_GE(r.stability_ratio, 1.0);
  EXPECT_LE(r.stability_ratio, 2.0);
}

TEST(Harnack, SuppliedGenerousCostHolds) {
  HarnackConfig c = base_config(ou_model());
  c.mode = ConstantsMode::Supplied;
  c.c1 = 5.0;
  HarnackReport r = log_harnack_check(c);
  for (const HarnackRow& row : r.rows) EXPECT_TRUE(row.holds) << row.family << " " << row.v_norm;
}

TEST(Harnack, RejectsInvalidConfig) {
  HarnackConfig c = base_config(ou_model());
  c.p = 1.0;
  EXPECT_THROW(harnack_power_check(c), InvalidArgument);
  c = base_config(ou_model());
  c.f = coordinate_function(0);  // takes negative values
  EXPECT_THROW(harnack_power_check(c), InvalidArgument);
}

TEST(MomentScan, GaussianCaseMatchesClosedForm) {
  ModelSpec m = ou_model();
  m.drift = zero_drift(1);
  MomentOptions opt;
  opt.intervals = 64;
  opt.mc = McOptions{20000, 8, 1};
  MomentReport r = exponential_moment_scan(m, m.x0, Vec::Ones(1), {0.5, 1.0}, {1.0, 2.0}, opt);
  ASSERT_TRUE(r.gaussian_variance.has_value());
  for (const MomentRow& row : r.rows) {
    ASSERT_TRUE(row.oracle.has_value());
    EXPECT_FALSE(row.inconclusive);
    EXPECT_NEAR(row.estimate, *row.oracle, 3.5 * row.standard_error) << row.v_norm << " " << row.lambda;
  }
}
