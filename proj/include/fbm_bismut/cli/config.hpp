#pragma once

// Experiment configuration: JSON parsing with field-path error context, and
// construction of the model objects from preset names.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbm_bismut/bismut_weights.hpp"
#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/harnack_suite.hpp"
#include "fbm_bismut/model.hpp"

namespace fbm_bismut::cli {

using nlohmann::json;

enum class ExperimentKind { Gradient, ShiftTest, Harnack, LogHarnack, MomentScan, ValidateOperators, SfdeGradient };

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_names() {
  static const std::vector<std::pair<std::string, ExperimentKind>> names{
      {"GRADIENT", ExperimentKind::Gradient},
      {"SHIFT_TEST", ExperimentKind::ShiftTest},
      {"HARNACK", ExperimentKind::Harnack},
      {"LOG_HARNACK", ExperimentKind::LogHarnack},
      {"MOMENT_SCAN", ExperimentKind::MomentScan},
      {"VALIDATE_OPERATORS", ExperimentKind::ValidateOperators},
      {"SFDE_GRADIENT", ExperimentKind::SfdeGradient}};
  return names;
}

inline std::string experiment_name(ExperimentKind k) {
  for (const auto& [n, v] : experiment_names())
    if (v == k) return n;
  return "?";
}

struct PresetInfo {
  std::string name;
  std::string kind;  // "drift", "diffusion", "functional drift"
  std::string parameters;
  std::string description;
};

inline const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> p{
      {"ZERO", "drift", "", "b = 0"},
      {"LINEAR", "drift", "kappa | matrix", "b(x) = -kappa x, or b(x) = A x for a d x d matrix A"},
      {"TANH_BOUNDED", "drift", "a, c", "b_i(x) = -a tanh(c x_i); bounded, Lipschitz gradient"},
      {"DELAY_LINEAR", "functional drift", "kappa (r0 = model.delay)", "b(X_t) = -kappa X(t - r0)"},
      {"IDENTITY", "diffusion", "", "sigma = Id"},
      {"DIAG_HOLDER", "diffusion", "exponent, epsilon",
       "sigma(t) = (1 + epsilon t^exponent) Id, analytic inverse"}};
  return p;
}

struct DriftParams {
  std::string preset = "ZERO";
  double kappa = 1.0;
  std::optional<Mat> matrix;
  double a = 1.0;
  double c = 1.0;
};

struct DiffusionParams {
  std::string preset = "IDENTITY";
  double exponent = 1.0;
  double epsilon = 0.5;
};

struct TestFunctionParams {
  std::string name = "coordinate";
  int index = 0;
  double width = 0.1;
  double value = 1.0;
};

struct ExperimentConfig {
  json raw;  // echoed into the manifest
  std::string id;
  ExperimentKind kind = ExperimentKind::Gradient;

  int dim = 1;
  DriftParams drift;
  DiffusionParams diffusion;
  double hurst = 0.7;
  double horizon = 1.0;
  std::vector<double> x0;
  double delay = 0.25;
  std::vector<double> history;

  TestFunctionParams test_function;
  std::vector<double> direction;

  int intervals = 256;
  std::size_t paths = 10000;
  std::uint64_t seed = 0;
  std::optional<WeightRoute> route;
  std::optional<double> lambda0;
  double p = 2.0;
  std::vector<double> p_values;
  std::vector<double> v_norms{0.1, 0.2, 0.4};
  std::vector<double> lambdas{0.5, 1.0, 2.0};
  std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
  double fd_step = 1e-3;
  ConstantsMode mode = ConstantsMode::Fitted;
  double c1 = 0.0, c2 = 0.0;
  std::vector<double> hurst_values;
  std::vector<double> eta;
  std::string output;
};

// ---------------------------------------------------------------------------
// Parsing helpers; every error names the offending field.

namespace detail {

inline void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

inline void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline double get_number(const json& obj, const std::string& path, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(join(path, key), "must be finite");
  return d;
}

inline long long get_integer(const json& obj, const std::string& path, const std::string& key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "must be an integer");
  return v.get<long long>();
}

inline std::string get_string(const json& obj, const std::string& path, const std::string& key,
                              const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(join(path, key), "must be a string");
  return v.get<std::string>();
}

inline std::vector<double> get_vector(const json& obj, const std::string& path, const std::string& key,
                                      const std::vector<double>& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) fail(join(path, key), "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(join(path, key) + "[" + std::to_string(i) + "]", "must be a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  ExperimentConfig c;
  c.raw = j;
  check_keys(j, "", {"id", "experiment", "model", "test_function", "direction", "numerics", "output"});

  if (!j.contains("experiment")) fail("experiment", "missing");
  std::string kind = get_string(j, "", "experiment", "");
  bool found = false;
  for (const auto& [n, k] : experiment_names())
    if (n == kind) {
      c.kind = k;
      found = true;
    }
  if (!found) fail("experiment", "unknown experiment kind '" + kind + "'");
  c.id = get_string(j, "", "id", experiment_name(c.kind));
  c.output = get_string(j, "", "output", "");

  json model = j.value("model", json::object());
  check_keys(model, "model", {"dim", "drift", "diffusion", "hurst", "horizon", "x0", "delay", "history"});
  c.dim = static_cast<int>(get_integer(model, "model", "dim", 1));
  if (c.dim < 1 || c.dim > kMaxDim) fail("model.dim", "must lie in [1, " + std::to_string(kMaxDim) + "]");
  c.hurst = get_number(model, "model", "hurst", 0.7);
  c.horizon = get_number(model, "model", "horizon", 1.0);
  c.x0 = get_vector(model, "model", "x0", std::vector<double>(c.dim, 0.0));
  c.delay = get_number(model, "model", "delay", 0.25);
  c.history = get_vector(model, "model", "history", std::vector<double>(c.dim, 1.0));

  json drift = model.value("drift", json{{"preset", "ZERO"}});
  check_keys(drift, "model.drift", {"preset", "kappa", "matrix", "a", "c"});
  c.drift.preset = get_string(drift, "model.drift", "preset", "ZERO");
  c.drift.kappa = get_number(drift, "model.drift", "kappa", 1.0);
  c.drift.a = get_number(drift, "model.drift", "a", 1.0);
  c.drift.c = get_number(drift, "model.drift", "c", 1.0);
  if (drift.contains("matrix")) {
    const json& m = drift.at("matrix");
    if (!m.is_array() || static_cast<int>(m.size()) != c.dim) fail("model.drift.matrix", "must be dim x dim");
    Mat a(c.dim, c.dim);
    for (int r = 0; r < c.dim; ++r) {
      const json& row = m[r];
      if (!row.is_array() || static_cast<int>(row.size()) != c.dim)
        fail("model.drift.matrix[" + std::to_string(r) + "]", "must have dim entries");
      for (int k = 0; k < c.dim; ++k) {
        if (!row[k].is_number()) fail("model.drift.matrix[" + std::to_string(r) + "][" + std::to_string(k) + "]", "must be a number");
        a(r, k) = row[k].get<double>();
      }
    }
    c.drift.matrix = a;
  }

  json diff = model.value("diffusion", json{{"preset", "IDENTITY"}});
  check_keys(diff, "model.diffusion", {"preset", "exponent", "epsilon"});
  c.diffusion.preset = get_string(diff, "model.diffusion", "preset", "IDENTITY");
  c.diffusion.exponent = get_number(diff, "model.diffusion", "exponent", 1.0);
  c.diffusion.epsilon = get_number(diff, "model.diffusion", "epsilon", 0.5);

  json tf = j.value("test_function", json{{"name", "coordinate"}});
  check_keys(tf, "test_function", {"name", "index", "width", "value"});
  c.test_function.name = get_string(tf, "test_function", "name", "coordinate");
  c.test_function.index = static_cast<int>(get_integer(tf, "test_function", "index", 0));
  c.test_function.width = get_number(tf, "test_function", "width", 0.1);
  c.test_function.value = get_number(tf, "test_function", "value", 1.0);

  std::vector<double> unit(c.dim, 0.0);
  unit[0] = 1.0;
  c.direction = get_vector(j, "", "direction", unit);

  json num = j.value("numerics", json::object());
  check_keys(num, "numerics",
             {"intervals", "paths", "seed", "route", "lambda0", "p", "p_values", "v_norms", "lambdas", "eps",
              "fd_step", "mode", "c1", "c2", "hurst_values", "eta"});
  c.intervals = static_cast<int>(get_integer(num, "numerics", "intervals", 256));
  long long paths = get_integer(num, "numerics", "paths", 10000);
  if (paths < 1) fail("numerics.paths", "must be positive");
  c.paths = static_cast<std::size_t>(paths);
  if (!num.contains("seed")) fail("numerics.seed", "missing (an explicit seed is required)");
  if (!num.at("seed").is_number_unsigned()) fail("numerics.seed", "must be a nonnegative integer");
  c.seed = num.at("seed").get<std::uint64_t>();
  if (num.contains("route")) {
    std::string r = get_string(num, "numerics", "route", "");
    if (r == "generic") c.route = WeightRoute::Generic;
    else if (r == "explicit") c.route = WeightRoute::Explicit;
    else if (r == "low_h") c.route = WeightRoute::LowH;
    else fail("numerics.route", "must be generic, explicit or low_h");
  }
  if (num.contains("lambda0")) c.lambda0 = get_number(num, "numerics", "lambda0", 0.0);
  c.p = get_number(num, "numerics", "p", 2.0);
  c.p_values = get_vector(num, "numerics", "p_values", {});
  c.v_norms = get_vector(num, "numerics", "v_norms", c.v_norms);
  c.lambdas = get_vector(num, "numerics", "lambdas", c.lambdas);
  c.eps = get_vector(num, "numerics", "eps", c.eps);
  c.fd_step = get_number(num, "numerics", "fd_step", 1e-3);
  std::string mode = get_string(num, "numerics", "mode", "FITTED");
  if (mode == "FITTED") c.mode = ConstantsMode::Fitted;
  else if (mode == "SUPPLIED") c.mode = ConstantsMode::Supplied;
  else fail("numerics.mode", "must be FITTED or SUPPLIED");
  c.c1 = get_number(num, "numerics", "c1", 0.0);
  c.c2 = get_number(num, "numerics", "c2", 0.0);
  c.hurst_values = get_vector(num, "numerics", "hurst_values", {});
  c.eta = get_vector(num, "numerics", "eta", c.direction);
  return c;
}

// ---------------------------------------------------------------------------
// Model construction and semantic validation

inline Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

inline Drift make_drift(const ExperimentConfig& c) {
  const auto& d = c.drift;
  if (d.preset == "ZERO") return zero_drift(c.dim);
  if (d.preset == "LINEAR") return d.matrix ? linear_drift(*d.matrix) : linear_drift(d.kappa, c.dim);
  if (d.preset == "TANH_BOUNDED") return tanh_bounded_drift(d.a, d.c, c.dim);
  if (d.preset == "DELAY_LINEAR") detail::fail("model.drift.preset", "DELAY_LINEAR needs experiment SFDE_GRADIENT");
  detail::fail("model.drift.preset", "unknown preset '" + d.preset + "'");
  return {};
}

inline FunctionalDrift make_functional_drift(const ExperimentConfig& c) {
  const auto& d = c.drift;
  if (d.preset == "DELAY_LINEAR") {
    if (c.dim != 1) detail::fail("model.dim", "DELAY_LINEAR is scalar");
    return delay_linear_drift(d.kappa);
  }
  if (d.preset == "ZERO") return zero_functional_drift(c.dim);
  detail::fail("model.drift.preset", "SFDE_GRADIENT supports DELAY_LINEAR and ZERO");
  return {};
}

inline Diffusion make_diffusion(const ExperimentConfig& c) {
  if (c.diffusion.preset == "IDENTITY") return identity_diffusion(c.dim);
  if (c.diffusion.preset == "DIAG_HOLDER") {
    try {
      return diag_holder_diffusion(c.dim, c.diffusion.exponent, c.diffusion.epsilon);
    } catch (const InvalidArgument& e) {
      detail::fail("model.diffusion", e.what());
    }
  }
  detail::fail("model.diffusion.preset", "unknown preset '" + c.diffusion.preset + "'");
  return {};
}

inline TestFunction make_test_function(const ExperimentConfig& c) {
  const auto& t = c.test_function;
  if (t.index < 0 || t.index >= c.dim) detail::fail("test_function.index", "out of range");
  if (t.name == "coordinate") return coordinate_function(t.index);
  if (t.name == "square") return square_function(t.index);
  if (t.name == "one_plus_tanh") return one_plus_tanh_function(t.index);
  if (t.name == "smooth_step") {
    if (!(t.width > 0.0)) detail::fail("test_function.width", "must be positive");
    return smooth_step_function(t.index, t.width);
  }
  if (t.name == "constant") return constant_function(t.value);
  detail::fail("test_function.name", "unknown test function '" + t.name + "'");
  return {};
}

inline ModelSpec make_model(const ExperimentConfig& c) {
  ModelSpec m;
  m.dim = c.dim;
  m.drift = make_drift(c);
  m.diffusion = make_diffusion(c);
  try {
    m.hurst = Hurst(c.hurst);
  } catch (const InvalidArgument&) {
    detail::fail("model.hurst", "must lie in (0, 1)");
  }
  m.horizon = c.horizon;
  if (static_cast<int>(c.x0.size()) != c.dim) detail::fail("model.x0", "must have dim entries");
  m.x0 = to_vec(c.x0);
  return m;
}

inline FunctionalModelSpec make_functional_model(const ExperimentConfig& c) {
  FunctionalModelSpec m;
  m.dim = c.dim;
  m.drift = make_functional_drift(c);
  m.diffusion = make_diffusion(c);
  try {
    m.hurst = Hurst(c.hurst);
  } catch (const InvalidArgument&) {
    detail::fail("model.hurst", "must lie in (0, 1)");
  }
  m.horizon = c.horizon;
  m.delay = c.delay;
  if (static_cast<int>(c.history.size()) != c.dim) detail::fail("model.history", "must have dim entries");
  m.history = constant_history(to_vec(c.history));
  return m;
}

// Semantic checks beyond the schema; throws ConfigError.
inline void validate_config(const ExperimentConfig& c) {
  using detail::fail;
  if (c.intervals < 2) fail("numerics.intervals", "must be at least 2");
  if (!(c.horizon > 0.0)) fail("model.horizon", "must be positive");
  if (c.kind != ExperimentKind::ValidateOperators) {
    if (!(c.hurst > 0.0 && c.hurst < 1.0) || c.hurst == 0.5) fail("model.hurst", "must lie in (0,1) and differ from 1/2");
    if (static_cast<int>(c.direction.size()) != c.dim) fail("direction", "must have dim entries");
  }
  auto check_model = [&](auto&& build_and_validate) {
    try {
      build_and_validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail("model", e.what());
    }
  };
  switch (c.kind) {
    case ExperimentKind::ValidateOperators: {
      auto hs = c.hurst_values.empty() ? std::vector<double>{c.hurst} : c.hurst_values;
      for (double h : hs)
        if (!(h > 0.0 && h < 1.0)) fail("numerics.hurst_values", "entries must lie in (0, 1)");
      if (c.intervals < 4) fail("numerics.intervals", "must be at least 4");
      return;
    }
    case ExperimentKind::SfdeGradient: {
      if (c.paths < 100) fail("numerics.paths", "gradient estimation needs at least 100 paths");
      check_model([&] {
        FunctionalModelSpec m = make_functional_model(c);
        Grid full = SfdeSolver::full_grid(m, c.intervals);
        m.validate(full);
        CutoffGamma gamma(m.delay, m.horizon);
      });
      if (static_cast<int>(c.eta.size()) != c.dim) fail("numerics.eta", "must have dim entries");
      make_test_function(c);
      if (!(c.fd_step >= 1e-5 && c.fd_step <= 1e-1)) fail("numerics.fd_step", "must lie in [1e-5, 1e-1]");
      return;
    }
    default:
      break;
  }
  check_model([&] { make_model(c).validate(Grid(0.0, c.horizon, c.intervals)); });
  TestFunction f = make_test_function(c);
  switch (c.kind) {
    case ExperimentKind::Gradient:
      if (c.paths < 100) fail("numerics.paths", "gradient estimation needs at least 100 paths");
      if (c.route == WeightRoute::Explicit && c.hurst < 0.5) fail("numerics.route", "explicit route needs H > 1/2");
      if (c.route == WeightRoute::LowH && (c.hurst > 0.5 || c.diffusion.preset != "IDENTITY"))
        fail("numerics.route", "low_h route needs H < 1/2 and sigma = IDENTITY");
      if (!(c.fd_step >= 1e-5 && c.fd_step <= 1e-1)) fail("numerics.fd_step", "must lie in [1e-5, 1e-1]");
      if (c.lambda0 && !(*c.lambda0 > 0.0 && *c.lambda0 <= 1.0)) fail("numerics.lambda0", "must lie in (0, 1]");
      break;
    case ExperimentKind::ShiftTest:
      for (double e : c.eps)
        if (!(e > 0.0 && e <= 0.1)) fail("numerics.eps", "entries must lie in (0, 0.1]");
      if (c.eps.size() < 2) fail("numerics.eps", "need at least two values");
      break;
    case ExperimentKind::Harnack:
    case ExperimentKind::LogHarnack: {
      auto ps = c.p_values.empty() ? std::vector<double>{c.p} : c.p_values;
      for (double p : ps)
        if (!(p > 1.0)) fail(c.p_values.empty() ? "numerics.p" : "numerics.p_values", "must exceed 1");
      for (double r : c.v_norms)
        if (!(r >= 0.0)) fail("numerics.v_norms", "entries must be nonnegative");
      if (c.paths < 2) fail("numerics.paths", "need at least two paths");
      break;
    }
    case ExperimentKind::MomentScan:
      for (double l : c.lambdas)
        if (!(l > 0.0)) fail("numerics.lambdas", "entries must be positive");
      for (double r : c.v_norms)
        if (!(r >= 0.0)) fail("numerics.v_norms", "entries must be nonnegative");
      if (c.paths < 2) fail("numerics.paths", "need at least two paths");
      break;
    default:
      break;
  }
  (void)f;
}

// Reads and parses a config file. JSON syntax errors carry line and column.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  ExperimentConfig c = parse_config(j);
  validate_config(c);
  return c;
}

}  // namespace fbm_bismut::cli
