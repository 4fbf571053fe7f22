#pragma once

// Deterministic parallel path loop. Path i always draws from path_seed(seed, i) and
// writes row i of the result, and reductions use pairwise summation in index
// order, so outputs do not depend on the number of workers or on scheduling.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/rng.hpp"

namespace fbm_bismut {

struct McOptions {
  std::size_t paths = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

using PathTable = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

inline SampleStats sample_stats(std::span<const double> v) {
  SampleStats s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = pairwise_sum(v) / static_cast<double>(v.size());
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - s.mean) * (v[i] - s.mean);
  if (v.size() > 1) {
    s.variance = pairwise_sum(sq) / static_cast<double>(v.size() - 1);
    s.std_error = std::sqrt(s.variance / static_cast<double>(v.size()));
  }
  return s;
}

inline std::vector<double> column(const PathTable& t, Eigen::Index c) {
  std::vector<double> v(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) v[static_cast<std::size_t>(i)] = t(i, c);
  return v;
}

inline SampleStats column_stats(const PathTable& t, Eigen::Index c) {
  auto v = column(t, c);
  return sample_stats(v);
}

// make_worker() builds one callable per thread; callable(index, seed, row) fills `width` values.
template <class MakeWorker>
PathTable run_paths(const McOptions& opt, int width, MakeWorker&& make_worker) {
  if (opt.paths == 0) throw InvalidArgument("run_paths: need at least one path");
  PathTable out(static_cast<Eigen::Index>(opt.paths), width);
  unsigned workers = std::max(1u, opt.workers);
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, opt.paths));
  constexpr std::size_t kChunk = 64;
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::size_t first_index = opt.paths;

  auto body = [&]() {
    auto worker = make_worker();
    for (;;) {
      std::size_t begin = next.fetch_add(kChunk);
      if (begin >= opt.paths) return;
      std::size_t end = std::min(begin + kChunk, opt.paths);
      for (std::size_t i = begin; i < end; ++i) {
        std::uint64_t s = path_seed(opt.seed, i);
        try {
          worker(i, s, out.row(static_cast<Eigen::Index>(i)).data());
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (i < first_index) {
            first_index = i;
            first_error = std::make_exception_ptr(PathFailure(e.what(), i, s));
          }
          next.store(opt.paths);
          return;
        }
      }
    }
  };

  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

inline unsigned hardware_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

}  // namespace fbm_bismut
