#pragma once

// Model descriptions: drift with analytic gradient, time-dependent diffusion with
// analytic inverse, and the preset families used by the CLI and tests.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/fbm_operators.hpp"
#include "fbm_bismut/grid.hpp"
#include "fbm_bismut/rng.hpp"

namespace fbm_bismut {

inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Callables must be stateless: they are invoked concurrently from worker threads.
struct Drift {
  std::string name;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> gradient;
  double lipschitz = 0.0;        // K >= sup |grad b|
  double holder_exponent = 1.0;  // beta_0: grad b is beta_0-Holder
  double holder_constant = 0.0;  // L
  bool zero = false;
  bool affine = false;
};

struct Diffusion {
  std::string name;
  std::function<Mat(double)> sigma;
  std::function<Mat(double)> sigma_inv;
  double holder_exponent = 1.0;  // alpha_0 of sigma^-1
  bool identity = false;
};

struct ModelSpec {
  int dim = 1;
  Drift drift;
  Diffusion diffusion;
  Hurst hurst{0.7};
  double horizon = 1.0;
  Vec x0;

  // Structural checks plus the numerical spot checks on a grid.
  void validate(const Grid& grid) const;
};

// Bounded linear functional drift b(phi) evaluated on node-sampled segments.
// Row 0 of a segment is phi(-r0), the last row is phi(0).
using Segment = Eigen::Ref<const Eigen::MatrixXd>;

struct FunctionalDrift {
  std::string name;
  std::function<Vec(const Segment&)> value;
  std::function<Vec(const Segment&, const Segment&)> directional;  // (phi, psi) -> (grad_psi b)(phi)
  double lipschitz = 0.0;
  bool zero = false;
};

struct FunctionalModelSpec {
  int dim = 1;
  FunctionalDrift drift;
  Diffusion diffusion;
  Hurst hurst{0.7};
  double horizon = 1.0;
  double delay = 0.25;                    // r0
  std::function<Vec(double)> history;     // xi on [-r0, 0]

  void validate(const Grid& grid) const;
};

// ---------------------------------------------------------------------------
// Drift presets

inline Drift zero_drift(int dim) {
  Drift d;
  d.name = "ZERO";
  d.value = [dim](const Vec&) { return Vec(Vec::Zero(dim)); };
  d.gradient = [dim](const Vec&) { return Mat(Mat::Zero(dim, dim)); };
  d.lipschitz = 0.0;
  d.holder_constant = 0.0;
  d.zero = true;
  d.affine = true;
  return d;
}

inline Drift linear_drift(const Mat& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("linear_drift: matrix must be square");
  Drift d;
  d.name = "LINEAR";
  d.value = [a](const Vec& x) { return Vec(a * x); };
  d.gradient = [a](const Vec&) { return a; };
  Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(a)};
  d.lipschitz = svd.singularValues()(0);
  d.holder_constant = 0.0;
  d.affine = true;
  return d;
}

// b(x) = -kappa x
inline Drift linear_drift(double kappa, int dim) {
  return linear_drift(Mat(-kappa * Mat::Identity(dim, dim)));
}

// b_i(x) = -a tanh(c x_i)
inline Drift tanh_bounded_drift(double a, double c, [[maybe_unused]] int dim) {
  if (!(a >= 0.0) || !(c > 0.0)) throw InvalidArgument("tanh_bounded_drift: need a >= 0, c > 0");
  Drift d;
  d.name = "TANH_BOUNDED";
  d.value = [a, c](const Vec& x) { return Vec(-a * (c * x.array()).tanh()); };
  d.gradient = [a, c](const Vec& x) {
    Vec th = (c * x.array()).tanh();
    Vec diag = -a * c * (1.0 - th.array().square());
    return Mat(diag.asDiagonal());
  };
  d.lipschitz = a * c;
  // sup |d/dx sech^2(cx)| = c * 4 / (3 sqrt 3)
  d.holder_constant = a * c * c * 4.0 / (3.0 * std::sqrt(3.0));
  return d;
}

// ---------------------------------------------------------------------------
// Diffusion presets

inline Diffusion identity_diffusion(int dim) {
  Diffusion s;
  s.name = "IDENTITY";
  s.sigma = [dim](double) { return Mat(Mat::Identity(dim, dim)); };
  s.sigma_inv = s.sigma;
  s.holder_exponent = 1.0;
  s.identity = true;
  return s;
}

// sigma(t) = diag(1 + eps t^alpha0)
inline Diffusion diag_holder_diffusion(int dim, double alpha0, double eps = 0.5) {
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw InvalidArgument("DIAG_HOLDER: need 0 < exponent <= 1");
  if (!(eps >= 0.0)) throw InvalidArgument("DIAG_HOLDER: need epsilon >= 0");
  Diffusion s;
  s.name = "DIAG_HOLDER";
  s.sigma = [dim, alpha0, eps](double t) {
    return Mat((1.0 + eps * std::pow(t, alpha0)) * Mat::Identity(dim, dim));
  };
  s.sigma_inv = [dim, alpha0, eps](double t) {
    return Mat(Mat::Identity(dim, dim) / (1.0 + eps * std::pow(t, alpha0)));
  };
  s.holder_exponent = alpha0;
  return s;
}

// ---------------------------------------------------------------------------
// Functional drift presets

// b(phi) = -kappa phi(-r0)
inline FunctionalDrift delay_linear_drift(double kappa) {
  FunctionalDrift d;
  d.name = "DELAY_LINEAR";
  d.value = [kappa](const Segment& phi) { return Vec(-kappa * phi.row(0).transpose()); };
  d.directional = [kappa](const Segment&, const Segment& psi) {
    return Vec(-kappa * psi.row(0).transpose());
  };
  d.lipschitz = std::abs(kappa);
  return d;
}

inline FunctionalDrift zero_functional_drift(int dim) {
  FunctionalDrift d;
  d.name = "ZERO";
  d.value = [dim](const Segment&) { return Vec(Vec::Zero(dim)); };
  d.directional = [dim](const Segment&, const Segment&) { return Vec(Vec::Zero(dim)); };
  d.zero = true;
  return d;
}

inline std::function<Vec(double)> constant_history(const Vec& xi) {
  return [xi](double) { return xi; };
}

// ---------------------------------------------------------------------------
// Validation

inline void validate_diffusion(const Diffusion& s, int dim, const Grid& grid) {
  if (!s.sigma || !s.sigma_inv) throw InvalidArgument("diffusion: sigma and sigma_inv required");
  for (int k = 0; k < grid.size(); ++k) {
    double t = grid.node(k);
    Mat a = s.sigma(t), b = s.sigma_inv(t);
    if (a.rows() != dim || a.cols() != dim || b.rows() != dim || b.cols() != dim)
      throw InvalidArgument("diffusion: wrong matrix shape");
    double err = (a * b - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff();
    if (!(err <= 1e-10))
      throw InvalidArgument("diffusion: sigma * sigma_inv != Id at node " + std::to_string(k));
  }
}

inline void ModelSpec::validate(const Grid& grid) const {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("model: dimension out of range");
  if (x0.size() != dim) throw InvalidArgument("model: x0 dimension mismatch");
  if (!drift.value || !drift.gradient) throw InvalidArgument("model: drift callables missing");
  if (!(horizon > 0.0)) throw InvalidArgument("model: horizon must be positive");
  if (grid.start() != 0.0 || std::abs(grid.end() - horizon) > 1e-12 * horizon)
    throw InvalidArgument("model: grid must span [0, T]");
  validate_diffusion(diffusion, dim, grid);
  if (hurst.regime() == Regime::High && !(diffusion.holder_exponent > hurst.value() - 0.5))
    throw InvalidArgument("model: need alpha0 > H - 1/2");
  // Lipschitz spot check on a deterministic probe set around x0.
  NormalStream probe(0x5eed);
  for (int i = 0; i < 64; ++i) {
    Vec x(dim);
    for (int j = 0; j < dim; ++j) x[j] = x0[j] + 3.0 * probe();
    Mat g = drift.gradient(x);
    if (g.rows() != dim || g.cols() != dim) throw InvalidArgument("model: gradient shape");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(g)};
    if (svd.singularValues()(0) > drift.lipschitz * (1.0 + 1e-9) + 1e-12)
      throw InvalidArgument("model: lipschitz bound violated at a probe point");
  }
}

inline void FunctionalModelSpec::validate(const Grid& grid) const {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("functional model: dimension out of range");
  if (!(delay > 0.0)) throw InvalidArgument("functional model: delay must be positive");
  if (!(horizon > delay)) throw InvalidArgument("functional model: need T > r0");
  if (!drift.value || !drift.directional || !history)
    throw InvalidArgument("functional model: callables missing");
  if (std::abs(grid.start() + delay) > 1e-12 || std::abs(grid.end() - horizon) > 1e-12 * horizon)
    throw InvalidArgument("functional model: grid must span [-r0, T]");
  double m = delay / grid.step();
  if (std::abs(m - std::nearbyint(m)) > 1e-9)
    throw InvalidArgument("functional model: r0 must be a multiple of the grid step");
  for (int k = 0; k <= static_cast<int>(std::nearbyint(m)); ++k) {
    Vec v = history(grid.node(k));
    if (v.size() != dim || !v.allFinite())
      throw InvalidArgument("functional model: history must be finite with matching dimension");
  }
  Grid pos(0.0, horizon, static_cast<int>(std::nearbyint(horizon / grid.step())));
  validate_diffusion(diffusion, dim, pos);
  if (hurst.regime() == Regime::High && !(diffusion.holder_exponent > hurst.value() - 0.5))
    throw InvalidArgument("functional model: need alpha0 > H - 1/2");
}

// Test functions f with gradient.
struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

inline TestFunction coordinate_function(int i) {
  return {"coordinate", [i](const Vec& y) { return y[i]; },
          [i](const Vec& y) {
            Vec g = Vec::Zero(y.size());
            g[i] = 1.0;
            return g;
          }};
}

inline TestFunction square_function(int i) {
  return {"square", [i](const Vec& y) { return y[i] * y[i]; },
          [i](const Vec& y) {
            Vec g = Vec::Zero(y.size());
            g[i] = 2.0 * y[i];
            return g;
          }};
}

inline TestFunction one_plus_tanh_function(int i) {
  return {"one_plus_tanh", [i](const Vec& y) { return 1.0 + std::tanh(y[i]); },
          [i](const Vec& y) {
            Vec g = Vec::Zero(y.size());
            double t = std::tanh(y[i]);
            g[i] = 1.0 - t * t;
            return g;
          }};
}

// Smoothed indicator of {y_i > 0}, width w.
inline TestFunction smooth_step_function(int i, double width) {
  return {"smooth_step", [i, width](const Vec& y) { return 0.5 * (1.0 + std::tanh(y[i] / width)); },
          [i, width](const Vec& y) {
            Vec g = Vec::Zero(y.size());
            double t = std::tanh(y[i] / width);
            g[i] = 0.5 * (1.0 - t * t) / width;
            return g;
          }};
}

inline TestFunction constant_function(double c) {
  return {"constant", [c](const Vec&) { return c; },
          [](const Vec& y) { return Vec(Vec::Zero(y.size())); }};
}

}  // namespace fbm_bismut
