#include <gtest/gtest.h>

#include <cmath>

#include "fbm_bismut/fbm_operators.hpp"
#include "fbm_bismut/monte_carlo.hpp"
#include "fbm_bismut/operator_checks.hpp"
#include "fbm_bismut/verification_oracles.hpp"

using namespace fbm_bismut;

TEST(Kernel, VarianceConstant) {
  EXPECT_NEAR(kernel_variance_constant(Hurst(0.3)), 1.3833763219458761, 1e-13);
  EXPECT_NEAR(kernel_variance_constant(Hurst(0.7)), 0.99508813590392496, 1e-13);
}

TEST(Kernel, PointValues) {
  struct Case {
    double h, t, s, k;
  };
  // Reference values from an arbitrary-precision evaluation of the hypergeometric form.
  for (Case c : {Case{0.3, 1.0, 0.5, 0.87301411433866804}, Case{0.3, 0.8, 0.1, 0.91472416675682296},
                 Case{0.3, 2.0, 1.5, 0.8517770733932893}, Case{0.7, 1.0, 0.5, 0.97714049739361679},
                 Case{0.7, 0.8, 0.1, 1.140696351472821}, Case{0.7, 2.0, 1.5, 0.96035780699379457}})
    EXPECT_NEAR(kernel_kh(Hurst(c.h), c.t, c.s), c.k, 1e-12) << c.h << " " << c.t << " " << c.s;
}

TEST(Kernel, ProductIntegralReproducesCovariance) {
  for (double h : {0.3, 0.7}) {
    OracleResult r = quad_kernel_product(Hurst(h), 1.0, 0.6);
    EXPECT_NEAR(r.value, covariance(Hurst(h), 1.0, 0.6), 1e-8) << h;
  }
}

TEST(Kernel, DerivativeMatchesFiniteDifference) {
  KernelEvaluator k(Hurst(0.7));
  double t = 0.9, s = 0.4, e = 1e-6;
  EXPECT_NEAR(k.dt(t, s), (k(t + e, s) - k(t - e, s)) / (2 * e), 1e-6);
}

TEST(Kernel, RejectsOutsideDomain) {
  EXPECT_THROW(kernel_kh(Hurst(0.7), 0.5, 0.5), InvalidArgument);
  EXPECT_THROW(kernel_kh(Hurst(0.7), 0.5, 0.0), InvalidArgument);
  EXPECT_THROW(Hurst(1.0), InvalidArgument);
}

class OperatorIdentities : public ::testing::TestWithParam<double> {};

TEST_P(OperatorIdentities, IsometryReconstructionInversion) {
  for (const OperatorCheck& c : validate_operators(Hurst(GetParam()), 256))
    EXPECT_TRUE(c.passed()) << c.name << " value " << c.value << " tol " << c.tolerance;
}

INSTANTIATE_TEST_SUITE_P(Hurst, OperatorIdentities, ::testing::Values(0.3, 0.7));

TEST(Samplers, DeterministicPerSeed) {
  Grid g(0.0, 1.0, 32);
  FbmPath a = sample_fbm(Hurst(0.7), g, 42), b = sample_fbm(Hurst(0.7), g, 42);
  FbmPath c = sample_fbm(Hurst(0.7), g, 43);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  EXPECT_TRUE(a.wiener.has_value());
}

TEST(Samplers, BrownianCaseIsCumulativeSum) {
  Grid g(0.0, 1.0, 16);
  FbmPath p = sample_fbm(Hurst(0.5), g, 5);
  Eigen::MatrixXd w = p.wiener->path();
  EXPECT_LT((p.values - w).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Samplers, TerminalVarianceVolterraAndCovFactor) {
  Grid g(0.0, 1.0, 32);
  const int n_paths = 8000;
  for (double h : {0.3, 0.7}) {
    VolterraSampler vs(Hurst(h), g);
    CovFactorSampler cs(Hurst(h), g);
    std::vector<double> a(n_paths), b(n_paths);
    for (int i = 0; i < n_paths; ++i) {
      double x = vs.sample(path_seed(9, i)).values(32, 0);
      double y = cs.sample(path_seed(10, i)).values(32, 0);
      a[i] = x * x;
      b[i] = y * y;
    }
    auto sa = sample_stats(a), sb = sample_stats(b);
    EXPECT_NEAR(sa.mean, 1.0, 3.5 * sa.std_error) << h;
    EXPECT_NEAR(sb.mean, 1.0, 3.5 * sb.std_error) << h;
  }
}

TEST(HolderNorm, LinearFunction) {
  Grid g(0.0, 1.0, 64);
  GridFunction f = GridFunction::sample(g, [](double x) { return 2.0 * x; });
  EXPECT_NEAR(holder_norm(f, 1.0), 2.0, 1e-12);
  EXPECT_NEAR(holder_norm(f, 0.5), 2.0, 1e-12);  // attained at the full interval
}
