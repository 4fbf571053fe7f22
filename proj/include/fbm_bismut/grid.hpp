#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fbm_bismut/errors.hpp"

namespace fbm_bismut {

// Uniform grid t_k = start + k h on [start, end] with `intervals` cells.
class Grid {
 public:
  Grid(double start, double end, int intervals) : start_(start), end_(end), n_(intervals) {
    if (!(std::isfinite(start) && std::isfinite(end)) || !(start < end))
      throw InvalidArgument("Grid: need finite start < end");
    if (intervals < 2) throw InvalidArgument("Grid: need at least 2 intervals");
    h_ = (end - start) / intervals;
  }

  double start() const { return start_; }
  double end() const { return end_; }
  int intervals() const { return n_; }
  int size() const { return n_ + 1; }
  double step() const { return h_; }
  double node(int k) const { return k == n_ ? end_ : start_ + k * h_; }
  double length() const { return end_ - start_; }

  std::vector<double> nodes() const {
    std::vector<double> t(n_ + 1);
    for (int k = 0; k <= n_; ++k) t[k] = node(k);
    return t;
  }

  bool operator==(const Grid& o) const {
    return start_ == o.start_ && end_ == o.end_ && n_ == o.n_;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  double start_;
  double end_;
  int n_;
  double h_;
};

inline void require_finite(const double* v, std::size_t count, const char* who) {
  for (std::size_t i = 0; i < count; ++i)
    if (!std::isfinite(v[i]))
      throw InvalidArgument(std::string(who) + ": non-finite value at index " + std::to_string(i));
}

// Scalar function sampled at every node of a grid.
struct GridFunction {
  Grid grid;
  std::vector<double> values;

  GridFunction(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.size())
      throw InvalidArgument("GridFunction: value count does not match node count");
    require_finite(values.data(), values.size(), "GridFunction");
  }

  template <class F>
  static GridFunction sample(const Grid& g, F&& f) {
    std::vector<double> v(g.size());
    for (int k = 0; k < g.size(); ++k) v[k] = f(g.node(k));
    return GridFunction(g, std::move(v));
  }

  double operator[](int k) const { return values[k]; }
  int size() const { return grid.size(); }
};

// d-vector valued function on a grid; row k holds the value at t_k.
struct GridPath {
  Grid grid;
  Eigen::MatrixXd values;

  GridPath(Grid g, Eigen::MatrixXd v) : grid(g), values(std::move(v)) {
    if (values.rows() != grid.size())
      throw InvalidArgument("GridPath: row count does not match node count");
    require_finite(values.data(), static_cast<std::size_t>(values.size()), "GridPath");
  }

  int dim() const { return static_cast<int>(values.cols()); }

  GridFunction component(int i) const {
    std::vector<double> v(values.rows());
    for (Eigen::Index k = 0; k < values.rows(); ++k) v[k] = values(k, i);
    return GridFunction(grid, std::move(v));
  }
};

}  // namespace fbm_bismut
