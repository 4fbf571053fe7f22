#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fbm_bismut/cli/config.hpp"
#include "fbm_bismut/cli/harness.hpp"

using namespace fbm_bismut;
using namespace fbm_bismut::cli;
namespace fs = std::filesystem;

namespace {

nlohmann::json minimal() {
  return nlohmann::json::parse(R"({"experiment": "GRADIENT", "numerics": {"seed": 1}})");
}

std::string error_of(const nlohmann::json& j) {
  try {
    validate_config(parse_config(j));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  int rc = std::system((std::string(FBM_CLI_PATH) + " " + args + " 2>/dev/null >/dev/null").c_str());
  return WEXITSTATUS(rc);
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("fbm_bismut_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, MinimalConfigHasDefaults) {
  ExperimentConfig c = parse_config(minimal());
  EXPECT_EQ(c.kind, ExperimentKind::Gradient);
  EXPECT_EQ(c.dim, 1);
  EXPECT_EQ(c.intervals, 256);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, ErrorsNameTheField) {
  auto j = minimal();
  j["numerics"].erase("seed");
  EXPECT_NE(error_of(j).find("numerics.seed"), std::string::npos);

  j = minimal();
  j["model"]["hurts"] = 0.7;
  EXPECT_NE(error_of(j).find("model"), std::string::npos);
  EXPECT_NE(error_of(j).find("hurts"), std::string::npos);

  j = minimal();
  j["model"]["hurst"] = 0.5;
  EXPECT_NE(error_of(j).find("model.hurst"), std::string::npos);

  j = minimal();
  j["experiment"] = "NOPE";
  EXPECT_NE(error_of(j).find("experiment"), std::string::npos);

  j = minimal();
  j["model"]["drift"] = {{"preset", "UNKNOWN"}};
  EXPECT_NE(error_of(j).find("model.drift"), std::string::npos);
}

TEST(Config, HalfIsAllowedOnlyForOperatorValidation) {
  auto j = minimal();
  j["experiment"] = "VALIDATE_OPERATORS";
  j["model"]["hurst"] = 0.5;
  EXPECT_EQ(error_of(j), "");
}

TEST(Config, SampleConfigsValidate) {
  int seen = 0;
  for (const auto& e : fs::directory_iterator(FBM_SAMPLES_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    ++seen;
  }
  EXPECT_GE(seen, 7);
}

TEST(Verdict, ThreeSigmaBand) {
  ResultRow r;
  r.estimate = 1.0;
  EXPECT_EQ(r.verdict(), Verdict::NA);
  r.oracle = 1.3;
  r.std_error = 0.05;
  r.oracle_error = 0.05;
  EXPECT_EQ(r.verdict(), Verdict::Pass);
  r.oracle = 1.31;
  EXPECT_EQ(r.verdict(), Verdict::Fail);
  r.inconclusive = true;
  EXPECT_EQ(r.verdict(), Verdict::NA);
}

TEST(Csv, SchemaHeaderAndEmptyFields) {
  ResultRow r;
  r.experiment_id = "a,b";
  r.kind = "GRADIENT";
  r.label = "x";
  r.estimate = 0.1;
  std::string csv = to_csv({r});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "#schema=1");
  std::getline(in, line);
  EXPECT_EQ(line, csv_header());
  std::getline(in, line);
  EXPECT_EQ(line, "\"a,b\",GRADIENT,x,,,,,,,,,0.10000000000000001,,,,,NA");
}

TEST(Cli, ConfigErrorExitsTwoWithoutOutputs) {
  fs::path dir = scratch("bad");
  fs::path cfg = dir / "bad.json";
  std::ofstream(cfg) << R"({"experiment": "GRADIENT", "numerics": {}})";
  EXPECT_EQ(run_cli("run " + cfg.string() + " --out " + (dir / "out").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "out"));
  std::ofstream(cfg) << R"({"experiment": "GRADIENT", )";
  EXPECT_EQ(run_cli("validate " + cfg.string()), 2);
}

TEST(Cli, RunWritesCsvAndManifest) {
  fs::path dir = scratch("run");
  std::string cfg = std::string(FBM_SAMPLES_DIR) + "/validate_operators.json";
  EXPECT_EQ(run_cli("validate " + cfg), 0);
  EXPECT_EQ(run_cli("run " + cfg + " --out " + dir.string()), 0);
  std::string csv = slurp(dir / "results.csv");
  EXPECT_EQ(csv.rfind("#schema=1\n", 0), 0u);
  EXPECT_EQ(csv.find(",FAIL\n"), std::string::npos);
  auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["schema"], 1);
  EXPECT_EQ(m["experiment"], "VALIDATE_OPERATORS");
  EXPECT_EQ(m["fail_rows"], 0);
  EXPECT_EQ(m["config"]["id"], "operators");
  EXPECT_EQ(run_cli("list-presets"), 0);
}
