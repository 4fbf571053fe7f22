#pragma once

// Pathwise Euler solvers for dX = b(X)dt + sigma(t)dB^H and its functional (delay)
// analogue, the linearized flows, and the Picard scheme used as a cross-check.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/fbm_operators.hpp"
#include "fbm_bismut/grid.hpp"
#include "fbm_bismut/model.hpp"

namespace fbm_bismut {

struct SolutionPath {
  Grid grid;               // [0,T], or [-r0,T] for functional models
  Eigen::MatrixXd values;  // rows are nodes
  FbmPath noise;
  int origin = 0;          // row index of t = 0

  int dim() const { return static_cast<int>(values.cols()); }
  Vec at(int k) const { return values.row(k).transpose(); }
  Vec terminal() const { return values.row(values.rows() - 1).transpose(); }
};

// sigma and sigma^-1 tabulated at the nodes of [0,T].
struct DiffusionTable {
  std::vector<Mat> sigma;
  std::vector<Mat> sigma_inv;
  bool identity = false;

  DiffusionTable(const Diffusion& d, const Grid& grid) : identity(d.identity) {
    sigma.reserve(grid.size());
    sigma_inv.reserve(grid.size());
    for (int k = 0; k < grid.size(); ++k) {
      sigma.push_back(d.sigma(grid.node(k)));
      sigma_inv.push_back(d.sigma_inv(grid.node(k)));
    }
  }
};

namespace detail {

inline void check_state(const Vec& x, int node) {
  if (!x.allFinite())
    throw SolverError("solver: non-finite state at node " + std::to_string(node), node);
}

}  // namespace detail

// Reusable Euler stepper for one (model, grid) pair; holds no per-path state.
class EulerSolver {
 public:
  EulerSolver(const ModelSpec& model, const Grid& grid)
      : model_(model), grid_(grid), table_(model.diffusion, grid) {
    model.validate(grid);
  }

  const ModelSpec& model() const { return model_; }
  const Grid& grid() const { return grid_; }
  const DiffusionTable& diffusion() const { return table_; }

  // bh: (n+1) x d fBm values. out: (n+1) x d.
  void solve(const Eigen::MatrixXd& bh, const Vec& x0, Eigen::MatrixXd& out) const {
    const int n = grid_.intervals();
    const double h = grid_.step();
    out.resize(n + 1, model_.dim);
    Vec x = x0;
    out.row(0) = x.transpose();
    for (int k = 0; k < n; ++k) {
      Vec db = (bh.row(k + 1) - bh.row(k)).transpose();
      if (table_.identity)
        x += model_.drift.value(x) * h + db;
      else
        x += model_.drift.value(x) * h + table_.sigma[k] * db;
      detail::check_state(x, k + 1);
      out.row(k + 1) = x.transpose();
    }
  }

  // J_{k+1} = J_k + grad b(X_k) J_k h with J_0 = v.
  void flow(const Eigen::MatrixXd& x, const Vec& v, Eigen::MatrixXd& out) const {
    const int n = grid_.intervals();
    const double h = grid_.step();
    out.resize(n + 1, model_.dim);
    Vec j = v;
    out.row(0) = j.transpose();
    for (int k = 0; k < n; ++k) {
      if (!model_.drift.zero) {
        Vec xk = x.row(k).transpose();
        j += model_.drift.gradient(xk) * j * h;
      }
      detail::check_state(j, k + 1);
      out.row(k + 1) = j.transpose();
    }
  }

 private:
  ModelSpec model_;
  Grid grid_;
  DiffusionTable table_;
};

inline SolutionPath solve_euler(const ModelSpec& model, const FbmPath& noise) {
  if (noise.dim() != model.dim) throw InvalidArgument("solve_euler: noise dimension mismatch");
  EulerSolver solver(model, noise.grid);
  SolutionPath p{noise.grid, {}, noise, 0};
  solver.solve(noise.values, model.x0, p.values);
  return p;
}

inline GridPath derivative_flow(const ModelSpec& model, const SolutionPath& path, const Vec& v) {
  if (v.size() != model.dim) throw InvalidArgument("derivative_flow: direction dimension mismatch");
  EulerSolver solver(model, path.grid);
  Eigen::MatrixXd j;
  solver.flow(path.values, v, j);
  return GridPath(path.grid, std::move(j));
}

// Picard iterates X^(m+1)(t) = x0 + int_0^t b(X^(m)) ds + int_0^t sigma dB^H, drift by
// trapezoid, noise integral identical to Euler. Returns X^(0..iters).
inline std::vector<Eigen::MatrixXd> picard_iterates(const ModelSpec& model, const FbmPath& noise,
                                                    int iters) {
  if (iters < 1) throw InvalidArgument("solve_picard: iters must be >= 1");
  const Grid& g = noise.grid;
  model.validate(g);
  const int n = g.intervals(), d = model.dim;
  const double h = g.step();
  DiffusionTable table(model.diffusion, g);
  Eigen::MatrixXd noise_int = Eigen::MatrixXd::Zero(n + 1, d);
  for (int k = 0; k < n; ++k) {
    Vec db = (noise.values.row(k + 1) - noise.values.row(k)).transpose();
    noise_int.row(k + 1) = noise_int.row(k) + (table.sigma[k] * db).transpose();
  }
  std::vector<Eigen::MatrixXd> out;
  Eigen::MatrixXd cur = model.x0.transpose().replicate(n + 1, 1);
  out.push_back(cur);
  Eigen::MatrixXd drift(n + 1, d);
  for (int m = 0; m < iters; ++m) {
    for (int k = 0; k <= n; ++k) drift.row(k) = model.drift.value(cur.row(k).transpose()).transpose();
    Eigen::MatrixXd next(n + 1, d);
    next.row(0) = model.x0.transpose();
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (int k = 0; k < n; ++k) {
      acc += 0.5 * h * (drift.row(k) + drift.row(k + 1));
      next.row(k + 1) = model.x0.transpose() + acc + noise_int.row(k + 1);
      detail::check_state(next.row(k + 1).transpose(), k + 1);
    }
    cur = std::move(next);
    out.push_back(cur);
  }
  return out;
}

inline SolutionPath solve_picard(const ModelSpec& model, const FbmPath& noise, int iters) {
  auto it = picard_iterates(model, noise, iters);
  return SolutionPath{noise.grid, std::move(it.back()), noise, 0};
}

// sup over node pairs of |X(t)-X(s)| / (|t-s| + ||B||_lambda |t-s|^lambda): the
// smallest constant for which the pathwise Holder bound holds on this path.
inline double holder_bound_constant(const SolutionPath& path, double lambda0) {
  const Grid& g = path.grid;
  double bnorm = holder_norm(path.noise.values, path.noise.grid, lambda0);
  const int n = g.intervals();
  double best = 0.0;
  for (int j = 0; j <= n; ++j)
    for (int k = j + 1; k <= n; ++k) {
      double dt = (k - j) * g.step();
      double denom = dt + bnorm * std::pow(dt, lambda0);
      best = std::max(best, (path.values.row(k) - path.values.row(j)).norm() / denom);
    }
  return best;
}

// Default lambda0 satisfying 1 - alpha0 < lambda0 < H and lambda0 beta0 > H - 1/2.
inline double default_lambda0(double hurst, double alpha0, double beta0) {
  double lo = std::max(1.0 - alpha0, (hurst - 0.5) / beta0);
  double lam = std::min(lo + 0.01, hurst - 0.01);
  return std::max(lam, 1e-3);
}

// ---------------------------------------------------------------------------
// Functional (delay) equations on [-r0, T]

class SfdeSolver {
 public:
  SfdeSolver(const FunctionalModelSpec& model, const Grid& full)
      : model_(model),
        full_(full),
        lag_(static_cast<int>(std::nearbyint(model.delay / full.step()))),
        positive_(0.0, model.horizon, full.intervals() - lag_),
        table_(model.diffusion, positive_) {
    model.validate(full);
  }

  static Grid full_grid(const FunctionalModelSpec& model, int n_positive) {
    double h = model.horizon / n_positive;
    double m = model.delay / h;
    if (std::abs(m - std::nearbyint(m)) > 1e-9)
      throw InvalidArgument("sfde: r0 must be a multiple of the grid step");
    int lag = static_cast<int>(std::nearbyint(m));
    return Grid(-model.delay, model.horizon, n_positive + lag);
  }

  const Grid& grid() const { return full_; }
  const Grid& positive_grid() const { return positive_; }
  int lag() const { return lag_; }
  const DiffusionTable& diffusion() const { return table_; }
  const FunctionalModelSpec& model() const { return model_; }

  void history(Eigen::MatrixXd& out) const {
    out.resize(full_.size(), model_.dim);
    for (int k = 0; k <= lag_; ++k) out.row(k) = model_.history(full_.node(k)).transpose();
  }

  // bh on the positive grid; out on the full grid.
  void solve(const Eigen::MatrixXd& bh, Eigen::MatrixXd& out) const {
    history(out);
    const int n = positive_.intervals();
    const double h = full_.step();
    for (int k = 0; k < n; ++k) {
      int row = lag_ + k;
      Vec x = out.row(row).transpose();
      Vec db = (bh.row(k + 1) - bh.row(k)).transpose();
      Vec drift = model_.drift.value(out.middleRows(row - lag_, lag_ + 1));
      x += drift * h + (table_.identity ? db : Vec(table_.sigma[k] * db));
      detail::check_state(x, row + 1);
      out.row(row + 1) = x.transpose();
    }
  }

  // dZ = (grad_{Z_t} b)(X_t) dt, Z_0 = eta. eta has lag+1 rows on [-r0, 0].
  void flow(const Eigen::MatrixXd& x, const Eigen::MatrixXd& eta, Eigen::MatrixXd& out) const {
    out.resize(full_.size(), model_.dim);
    out.topRows(lag_ + 1) = eta;
    const int n = positive_.intervals();
    const double h = full_.step();
    for (int k = 0; k < n; ++k) {
      int row = lag_ + k;
      Vec z = out.row(row).transpose();
      if (!model_.drift.zero)
        z += model_.drift.directional(x.middleRows(row - lag_, lag_ + 1),
                                      out.middleRows(row - lag_, lag_ + 1)) *
             h;
      detail::check_state(z, row + 1);
      out.row(row + 1) = z.transpose();
    }
  }

 private:
  FunctionalModelSpec model_;
  Grid full_;
  int lag_;
  Grid positive_;
  DiffusionTable table_;
};

// noise lives on [0,T]; its step fixes the full grid on [-r0,T].
inline SolutionPath solve_sfde(const FunctionalModelSpec& model, const FbmPath& noise) {
  if (noise.dim() != model.dim) throw InvalidArgument("solve_sfde: noise dimension mismatch");
  if (noise.grid.start() != 0.0) throw InvalidArgument("solve_sfde: noise must start at 0");
  Grid full = SfdeSolver::full_grid(model, noise.grid.intervals());
  SfdeSolver solver(model, full);
  SolutionPath p{full, {}, noise, solver.lag()};
  solver.solve(noise.values, p.values);
  return p;
}

inline GridPath sfde_derivative_flow(const FunctionalModelSpec& model, const SolutionPath& path,
                                     const Eigen::MatrixXd& eta) {
  SfdeSolver solver(model, path.grid);
  if (eta.rows() != solver.lag() + 1 || eta.cols() != model.dim)
    throw InvalidArgument("sfde_derivative_flow: eta must be sampled on [-r0, 0]");
  Eigen::MatrixXd z;
  solver.flow(path.values, eta, z);
  return GridPath(path.grid, std::move(z));
}

}  // namespace fbm_bismut
