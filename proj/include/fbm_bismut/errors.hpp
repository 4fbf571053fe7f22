#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fbm_bismut {

// Raised when an input violates a precondition (bad order, non-finite value, shape mismatch).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A singular integral diverged or exceeded the overflow guard.
class InsufficientRegularity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int node) : std::runtime_error(what), node_(node) {}
  int node() const noexcept { return node_; }

 private:
  int node_;
};

// Wraps a failure inside a Monte Carlo run with the path that triggered it.
class PathFailure : public std::runtime_error {
 public:
  PathFailure(const std::string& what, std::uint64_t path_index, std::uint64_t path_seed)
      : std::runtime_error(what + " (path " + std::to_string(path_index) + ", seed " +
                           std::to_string(path_seed) + ")"),
        index_(path_index),
        seed_(path_seed) {}
  std::uint64_t path_index() const noexcept { return index_; }
  std::uint64_t path_seed() const noexcept { return seed_; }

 private:
  std::uint64_t index_;
  std::uint64_t seed_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fbm_bismut
