#pragma once

// Monte Carlo checks of power and log Harnack inequalities, the exponential moment
// of the Bismut martingale, and a finite-difference vs gradient-bound table.
// All comparisons at x and x + v share noise paths.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fbm_bismut/bismut_weights.hpp"
#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/model.hpp"
#include "fbm_bismut/monte_carlo.hpp"
#include "fbm_bismut/sde_engine.hpp"

namespace fbm_bismut {

enum class ConstantsMode { Fitted, Supplied };

struct HarnackConfig {
  ModelSpec model;
  TestFunction f;                          // used for the single-f rows and SUPPLIED mode
  Vec x;
  Vec direction;                           // v / |v|; scaled by each entry of v_norms
  std::vector<double> v_norms{0.1, 0.2, 0.4};
  double p = 2.0;
  int intervals = 128;
  McOptions mc;
  ConstantsMode mode = ConstantsMode::Fitted;
  double c1 = 0.0, c2 = 0.0;               // SUPPLIED: exponent cost (c1 + c2 |v|^2) |v|^2
  double tilt_max = 4.0;                   // FITTED: u ranges over [-tilt_max, tilt_max]
  int tilt_points = 401;
  double tilt_clamp = 8.0;

  void validate() const {
    if (!(p > 1.0)) throw InvalidArgument("harnack: p must exceed 1");
    if (x.size() != model.dim || direction.size() != model.dim)
      throw InvalidArgument("harnack: dimension mismatch");
    if (!(direction.norm() > 0.0)) throw InvalidArgument("harnack: direction must be nonzero");
    for (double r : v_norms)
      if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("harnack: |v| must be nonnegative");
    if (mc.paths < 2) throw InvalidArgument("harnack: need at least two paths");
    if (tilt_points < 3 || !(tilt_max > 0.0) || !(tilt_clamp > 0.0))
      throw InvalidArgument("harnack: invalid tilt grid");
  }
};

// Terminal states at x and at x + r v_hat for every r, on shared noise.
struct TerminalSample {
  int dim = 1;
  std::vector<double> norms;
  PathTable table;  // row i: [X^x(T), X^{x + r_1 v}(T), ...], dim entries each

  std::size_t paths() const { return static_cast<std::size_t>(table.rows()); }
  Vec at(std::size_t i, int point) const {
    Vec y(dim);
    for (int c = 0; c < dim; ++c) y[c] = table(static_cast<Eigen::Index>(i), point * dim + c);
    return y;
  }
};

inline TerminalSample sample_terminals(const ModelSpec& model, const Vec& x, const Vec& v_hat,
                                       const std::vector<double>& norms, int intervals,
                                       const McOptions& mc) {
  Grid g(0.0, model.horizon, intervals);
  VolterraSampler sampler(model.hurst, g);
  EulerSolver solver(model, g);
  const int d = model.dim;
  const int points = 1 + static_cast<int>(norms.size());
  TerminalSample s;
  s.dim = d;
  s.norms = norms;
  s.table = run_paths(mc, points * d, [&]() {
    return [&, dw = Eigen::MatrixXd(intervals, d), bh = Eigen::MatrixXd(), xs = Eigen::MatrixXd()](
               std::size_t, std::uint64_t seed, double* row) mutable {
      fill_wiener_increments(g, seed, dw);
      sampler.apply(dw, bh);
      for (int p = 0; p < points; ++p) {
        Vec start = p == 0 ? x : Vec(x + norms[p - 1] * v_hat);
        solver.solve(bh, start, xs);
        for (int c = 0; c < d; ++c) row[p * d + c] = xs(intervals, c);
      }
    };
  });
  return s;
}

struct HarnackRow {
  std::string kind;        // "power" or "log"
  std::string family;      // "tilt" (fitted), "f" (single test function)
  double v_norm = 0.0;
  double p = 0.0;
  double lhs = 0.0;        // (P f(x))^p or P log f(x)
  double rhs = 0.0;        // P f^p(x+v) or log P f(x+v)
  double gap = 0.0;        // log L - log R (power) or L - R (log), at the optimum for "tilt"
  double gap_se = 0.0;     // delta-method standard error of gap
  double constant = 0.0;   // fitted constant, or the SUPPLIED cost
  double tilt = 0.0;       // optimal u for the tilt family
  bool holds = true;       // inequality holds within 3 SE
};

struct HarnackReport {
  std::vector<HarnackRow> rows;
  bool jensen_ok = true;        // v = 0 baseline
  double jensen_gap = 0.0;
  double jensen_se = 0.0;
  std::vector<double> fitted;   // fitted constant per |v| (excluding |v| = 0)
  double stability_ratio = std::numeric_limits<double>::quiet_NaN();
  std::string note = "rho read as beta0";
};

namespace detail {

// Mean and delta-method SE of a * log(mean A) - log(mean B), a and b paired.
struct LogRatio {
  double value = 0.0;
  double se = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

inline LogRatio log_ratio(const std::vector<double>& a, const std::vector<double>& b, double pa) {
  LogRatio r;
  SampleStats sa = sample_stats(a), sb = sample_stats(b);
  r.mean_a = sa.mean;
  r.mean_b = sb.mean;
  r.value = pa * std::log(sa.mean) - std::log(sb.mean);
  std::vector<double> inf(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) inf[i] = pa * a[i] / sa.mean - b[i] / sb.mean;
  r.se = sample_stats(inf).std_error;
  return r;
}

// mean(log A) - log(mean B).
inline LogRatio log_gap(const std::vector<double>& log_a, const std::vector<double>& b) {
  LogRatio r;
  SampleStats sa = sample_stats(log_a), sb = sample_stats(b);
  r.mean_a = sa.mean;
  r.mean_b = sb.mean;
  r.value = sa.mean - std::log(sb.mean);
  std::vector<double> inf(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) inf[i] = log_a[i] - b[i] / sb.mean;
  r.se = sample_stats(inf).std_error;
  return r;
}

inline void require_positive(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x))
      throw InvalidArgument(std::string(what) + ": non-positive test function sample");
}

inline std::vector<double> projections(const TerminalSample& s, int point, const Vec& v_hat) {
  std::vector<double> out(s.paths());
  for (std::size_t i = 0; i < s.paths(); ++i) out[i] = s.at(i, point).dot(v_hat);
  return out;
}

inline std::vector<double> f_values(const TerminalSample& s, int point, const TestFunction& f,
                                    double power = 1.0) {
  std::vector<double> out(s.paths());
  for (std::size_t i = 0; i < s.paths(); ++i) out[i] = std::pow(f.value(s.at(i, point)), power);
  return out;
}

inline std::vector<double> tilt_grid(const HarnackConfig& cfg) {
  std::vector<double> u(cfg.tilt_points);
  for (int i = 0; i < cfg.tilt_points; ++i)
    u[i] = -cfg.tilt_max + 2.0 * cfg.tilt_max * i / (cfg.tilt_points - 1);
  return u;
}

// Maximizes eval(u).value over the tilt grid, then over a finer grid spanning the
// neighbouring cells of the coarse optimum.
template <class Eval>
std::pair<double, LogRatio> maximize_tilt(const HarnackConfig& cfg, Eval&& eval) {
  auto us = tilt_grid(cfg);
  double best_u = 0.0;
  LogRatio best;
  best.value = -std::numeric_limits<double>::infinity();
  auto consider = [&](double u) {
    LogRatio r = eval(u);
    if (r.value > best.value) {
      best = r;
      best_u = u;
    }
  };
  for (double u : us) consider(u);
  const double step = us[1] - us[0];
  const double centre = best_u;
  for (int i = -20; i <= 20; ++i) consider(centre + step * i / 20.0);
  return {best_u, best};
}

inline double cost_exponent(const HarnackConfig& cfg, double r) {
  return (cfg.c1 + cfg.c2 * r * r) * r * r;
}

}  // namespace detail

// Power Harnack (P f(x))^p <= P f^p(x+v) exp[(p/(p-1)) c |v|^2].
inline HarnackReport harnack_power_check(const HarnackConfig& cfg) {
  cfg.validate();
  Vec v_hat = cfg.direction / cfg.direction.norm();
  TerminalSample s = sample_terminals(cfg.model, cfg.x, v_hat, cfg.v_norms, cfg.intervals, cfg.mc);
  const double p = cfg.p, q = p / (p - 1.0);
  HarnackReport rep;

  // Jensen baseline: same sample on both sides.
  auto f0 = detail::f_values(s, 0, cfg.f);
  detail::require_positive(f0, "harnack_power_check");
  auto f0p = detail::f_values(s, 0, cfg.f, p);
  auto j = detail::log_ratio(f0, f0p, p);
  rep.jensen_gap = j.value;
  rep.jensen_se = j.se;
  rep.jensen_ok = j.value <= 3.0 * j.se + 1e-12;

  auto y0 = detail::projections(s, 0, v_hat);
  for (std::size_t k = 0; k < cfg.v_norms.size(); ++k) {
    const double r = cfg.v_norms[k];
    const int point = static_cast<int>(k) + 1;
    auto fr = detail::f_values(s, point, cfg.f, p);
    detail::require_positive(fr, "harnack_power_check");
    auto single = detail::log_ratio(f0, fr, p);
    HarnackRow row{"power", "f", r, p, std::pow(single.mean_a, p), single.mean_b, single.value, single.se};
    if (cfg.mode == ConstantsMode::Supplied) {
      row.constant = detail::cost_exponent(cfg, r);
      row.holds = single.value <= q * row.constant + 3.0 * single.se;
    } else {
      row.constant = r > 0.0 ? std::max(0.0, single.value) / (q * r * r) : 0.0;
    }
    rep.rows.push_back(row);

    if (cfg.mode == ConstantsMode::Fitted && r > 0.0) {
      auto yr = detail::projections(s, point, v_hat);
      std::vector<double> a(s.paths()), b(s.paths());
      auto [u, lr] = detail::maximize_tilt(cfg, [&](double u) {
        for (std::size_t i = 0; i < s.paths(); ++i) {
          a[i] = std::exp(u * std::clamp(y0[i], -cfg.tilt_clamp, cfg.tilt_clamp));
          b[i] = std::exp(p * u * std::clamp(yr[i], -cfg.tilt_clamp, cfg.tilt_clamp));
        }
        return detail::log_ratio(a, b, p);
      });
      HarnackRow best{"power", "tilt", r, p, std::pow(lr.mean_a, p), lr.mean_b, lr.value, lr.se};
      best.tilt = u;
      best.constant = std::max(0.0, best.gap) / (q * r * r);
      rep.fitted.push_back(best.constant);
      rep.rows.push_back(best);
    }
  }
  if (rep.fitted.size() >= 2) {
    auto [lo, hi] = std::minmax_element(rep.fitted.begin(), rep.fitted.end());
    rep.stability_ratio = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  }
  return rep;
}

// Log Harnack P log f(x) <= log P f(x+v) + c |v|^2.
inline HarnackReport log_harnack_check(const HarnackConfig& cfg) {
  cfg.validate();
  Vec v_hat = cfg.direction / cfg.direction.norm();
  TerminalSample s = sample_terminals(cfg.model, cfg.x, v_hat, cfg.v_norms, cfg.intervals, cfg.mc);
  HarnackReport rep;

  auto f0 = detail::f_values(s, 0, cfg.f);
  detail::require_positive(f0, "log_harnack_check");
  std::vector<double> log_f0(f0.size());
  for (std::size_t i = 0; i < f0.size(); ++i) log_f0[i] = std::log(f0[i]);
  auto j = detail::log_gap(log_f0, f0);
  rep.jensen_gap = j.value;
  rep.jensen_se = j.se;
  rep.jensen_ok = j.value <= 3.0 * j.se + 1e-12;

  auto y0 = detail::projections(s, 0, v_hat);
  for (std::size_t k = 0; k < cfg.v_norms.size(); ++k) {
    const double r = cfg.v_norms[k];
    const int point = static_cast<int>(k) + 1;
    auto fr = detail::f_values(s, point, cfg.f);
    detail::require_positive(fr, "log_harnack_check");
    auto single = detail::log_gap(log_f0, fr);
    HarnackRow row{"log", "f", r, 0.0, single.mean_a, std::log(single.mean_b), single.value, single.se};
    if (cfg.mode == ConstantsMode::Supplied) {
      row.constant = detail::cost_exponent(cfg, r);
      row.holds = single.value <= row.constant + 3.0 * single.se;
    } else {
      row.constant = r > 0.0 ? std::max(0.0, single.value) / (r * r) : 0.0;
    }
    rep.rows.push_back(row);

    if (cfg.mode == ConstantsMode::Fitted && r > 0.0) {
      auto yr = detail::projections(s, point, v_hat);
      std::vector<double> la(s.paths()), b(s.paths());
      auto [u, g] = detail::maximize_tilt(cfg, [&](double u) {
        for (std::size_t i = 0; i < s.paths(); ++i) {
          la[i] = u * std::clamp(y0[i], -cfg.tilt_clamp, cfg.tilt_clamp);
          b[i] = std::exp(u * std::clamp(yr[i], -cfg.tilt_clamp, cfg.tilt_clamp));
        }
        return detail::log_gap(la, b);
      });
      HarnackRow best{"log", "tilt", r, 0.0, g.mean_a, std::log(g.mean_b), g.value, g.se};
      best.tilt = u;
      best.constant = std::max(0.0, best.gap) / (r * r);
      rep.fitted.push_back(best.constant);
      rep.rows.push_back(best);
    }
  }
  if (rep.fitted.size() >= 2) {
    auto [lo, hi] = std::minmax_element(rep.fitted.begin(), rep.fitted.end());
    rep.stability_ratio = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  }
  return rep;
}

// Closed-form tilt-family constant for dX = -kappa X dt + dB^H in d = 1, where X(T)
// is Gaussian with variance s2 and mean e^{-kappa T} x.
inline double gaussian_tilt_constant(double kappa, double horizon, double s2) {
  return std::exp(-2.0 * kappa * horizon) / (2.0 * s2);
}

// Same constant for the discretized scalar linear model: X(T) = a x + sum_k c_k dW_k
// exactly under Euler stepping, so the tilt constant is a^2 / (2 h sum c_k^2).
inline std::optional<double> linear_tilt_constant(const ModelSpec& model, int intervals) {
  if (model.dim != 1 || !model.drift.affine) return std::nullopt;
  Grid g(0.0, model.horizon, intervals);
  VolterraSampler sampler(model.hurst, g);
  EulerSolver solver(model, g);
  Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(intervals, 1), bh, x;
  sampler.apply(dw, bh);
  solver.solve(bh, Vec::Zero(1), x);
  const double base = x(intervals, 0);
  solver.solve(bh, Vec::Ones(1), x);
  const double a = x(intervals, 0) - base;
  double s2 = 0.0;
  for (int k = 0; k < intervals; ++k) {
    dw.setZero();
    dw(k, 0) = 1.0;
    sampler.apply(dw, bh);
    solver.solve(bh, Vec::Zero(1), x);
    double c = x(intervals, 0) - base;
    s2 += c * c * g.step();
  }
  return a * a / (2.0 * s2);
}

// ---------------------------------------------------------------------------
// Exponential moment of M_T = delta(h)

struct MomentRow {
  double v_norm = 0.0;
  double lambda = 0.0;
  double estimate = 0.0;       // E exp(M_T / lambda)
  double standard_error = 0.0;
  double max_share = 0.0;      // largest single-path share of the sum
  bool inconclusive = false;   // heavy-tail guard tripped
  bool finite = true;
  std::optional<double> oracle;  // exp(s^2 / 2 lambda^2) when the integrand is deterministic
};

struct MomentReport {
  std::vector<double> lambdas;
  std::vector<double> v_norms;
  std::vector<MomentRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();  // log E vs |v|^2 / lambda^2
  double slope_se = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> gaussian_variance;  // s^2 for |v| = 1 when b = 0, sigma = Id
};

struct MomentOptions {
  int intervals = 128;
  McOptions mc;
  std::optional<WeightRoute> route;
  double heavy_tail_share = 0.5;
};

inline MomentReport exponential_moment_scan(const ModelSpec& model, const Vec& x, const Vec& direction,
                                            const std::vector<double>& v_norms,
                                            const std::vector<double>& lambdas,
                                            const MomentOptions& opt) {
  for (double l : lambdas)
    if (!(l > 0.0)) throw InvalidArgument("exponential_moment_scan: lambda must be positive");
  if (x.size() != model.dim || direction.size() != model.dim || !(direction.norm() > 0.0))
    throw InvalidArgument("exponential_moment_scan: invalid x or direction");
  Vec v_hat = direction / direction.norm();
  WeightRoute route = opt.route.value_or(default_route(model));
  BismutSetup setup(model, opt.intervals, route);
  const int nv = static_cast<int>(v_norms.size());
  PathTable t = run_paths(opt.mc, nv, [&]() {
    return [&, w = std::make_shared<BismutWorker>(setup)](std::size_t, std::uint64_t seed, double* row) {
      for (int k = 0; k < nv; ++k) row[k] = v_norms[k] == 0.0 ? 0.0 : w->run(seed, x, Vec(v_norms[k] * v_hat));
    };
  });

  MomentReport rep;
  rep.lambdas = lambdas;
  rep.v_norms = v_norms;
  // With b = 0 and sigma = Id the integrand does not depend on the path, so M_T is
  // Gaussian with variance h * sum |phi_k|^2.
  if (model.drift.zero && model.diffusion.identity) {
    BismutWorker w(setup);
    w.run(opt.mc.seed, x, v_hat);
    const Eigen::MatrixXd& phi = w.integrand_values();
    rep.gaussian_variance = setup.grid().step() * phi.topRows(setup.grid().intervals()).squaredNorm();
  }

  double sxy = 0.0, sxx = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k < nv; ++k) {
    auto m = column(t, k);
    for (double lam : lambdas) {
      MomentRow row;
      row.v_norm = v_norms[k];
      row.lambda = lam;
      std::vector<double> e(m.size());
      double mx = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        e[i] = std::exp(m[i] / lam);
        mx = std::max(mx, e[i]);
      }
      SampleStats s = sample_stats(e);
      row.estimate = s.mean;
      row.standard_error = s.std_error;
      row.finite = std::isfinite(s.mean) && std::isfinite(s.std_error);
      row.max_share = row.finite ? mx / (s.mean * static_cast<double>(m.size())) : 1.0;
      row.inconclusive = !row.finite || row.max_share > opt.heavy_tail_share;
      if (rep.gaussian_variance)
        row.oracle = std::exp(*rep.gaussian_variance * v_norms[k] * v_norms[k] / (2.0 * lam * lam));
      if (!row.inconclusive && v_norms[k] > 0.0) {
        double xr = v_norms[k] * v_norms[k] / (lam * lam);
        double yr = std::log(row.estimate);
        sxy += xr * yr;
        sxx += xr * xr;
        pts.emplace_back(xr, yr);
      }
      rep.rows.push_back(row);
    }
  }
  if (sxx > 0.0) {
    rep.slope = sxy / sxx;
    if (pts.size() > 1) {
      double rss = 0.0;
      for (auto [a, b] : pts) rss += (b - rep.slope * a) * (b - rep.slope * a);
      rep.slope_se = std::sqrt(rss / static_cast<double>(pts.size() - 1) / sxx);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Difference quotient vs integrated gradient along a segment (demonstration only)

struct GradientBoundRow {
  double x = 0.0;            // coordinate of the base point along the scan direction
  double difference = 0.0;   // |P f(x+v) - P f(x)|
  double difference_se = 0.0;
  double bound = 0.0;        // int_0^1 |grad_v P f(x + theta v)| d theta, midpoint rule
  double bound_se = 0.0;
};

struct GradientBoundOptions {
  int intervals = 128;
  McOptions mc;
  int segment_points = 4;
};

inline std::vector<GradientBoundRow> gradient_bound_demo(const ModelSpec& model, const TestFunction& f,
                                                         const std::vector<Vec>& xs, const Vec& v,
                                                         const GradientBoundOptions& opt) {
  if (opt.segment_points < 1) throw InvalidArgument("gradient_bound_demo: need segment points");
  std::vector<GradientBoundRow> out;
  Grid g(0.0, model.horizon, opt.intervals);
  VolterraSampler sampler(model.hurst, g);
  EulerSolver solver(model, g);
  for (const Vec& x : xs) {
    PathTable t = run_paths(opt.mc, 1, [&]() {
      return [&, dw = Eigen::MatrixXd(opt.intervals, model.dim), bh = Eigen::MatrixXd(),
              a = Eigen::MatrixXd(), b = Eigen::MatrixXd()](std::size_t, std::uint64_t seed,
                                                            double* row) mutable {
        fill_wiener_increments(g, seed, dw);
        sampler.apply(dw, bh);
        solver.solve(bh, x, a);
        solver.solve(bh, Vec(x + v), b);
        row[0] = f.value(b.row(opt.intervals).transpose()) - f.value(a.row(opt.intervals).transpose());
      };
    });
    SampleStats d = column_stats(t, 0);
    GradientBoundRow row;
    row.x = x[0];
    row.difference = std::abs(d.mean);
    row.difference_se = d.std_error;
    GradientOptions go;
    go.intervals = opt.intervals;
    go.mc = opt.mc;
    double var = 0.0;
    for (int q = 0; q < opt.segment_points; ++q) {
      double theta = (q + 0.5) / opt.segment_points;
      EstimateReport e = bismut_gradient(model, f, Vec(x + theta * v), v, go);
      row.bound += std::abs(e.estimate) / opt.segment_points;
      var += e.standard_error * e.standard_error / (opt.segment_points * opt.segment_points);
    }
    row.bound_se = std::sqrt(var);
    out.push_back(row);
  }
  return out;
}

}  // namespace fbm_bismut
