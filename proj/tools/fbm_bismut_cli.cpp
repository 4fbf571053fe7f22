// Command-line front end: run / list-presets / validate.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "fbm_bismut/cli/config.hpp"
#include "fbm_bismut/cli/harness.hpp"

namespace {

constexpr int kExitFailRows = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int cmd_run(const std::string& path, const std::string& out, unsigned workers, bool verbose) {
  using namespace fbm_bismut::cli;
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const fbm_bismut::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::filesystem::path dir = !out.empty() ? out : (!cfg.output.empty() ? cfg.output : "out/" + cfg.id);
  RunOptions opt{workers == 0 ? fbm_bismut::hardware_workers() : workers, verbose};
  try {
    RunResult r = run_and_write(cfg, dir, opt);
    std::size_t fails = count_failures(r.rows);
    if (verbose) std::cerr << to_csv(r.rows);
    std::cerr << experiment_name(cfg.kind) << " '" << cfg.id << "': " << r.rows.size() << " rows, " << fails
              << " FAIL, " << r.wall_seconds << " s -> " << dir.string() << "\n";
    return fails == 0 ? 0 : kExitFailRows;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_validate(const std::string& path) {
  try {
    auto cfg = fbm_bismut::cli::load_config(path);
    std::cout << "ok: " << fbm_bismut::cli::experiment_name(cfg.kind) << " '" << cfg.id << "'\n";
    return 0;
  } catch (const fbm_bismut::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

void cmd_list_presets() {
  for (const auto& p : fbm_bismut::cli::presets())
    std::printf("%-14s %-17s %-28s %s\n", p.name.c_str(), p.kind.c_str(),
                p.parameters.empty() ? "-" : p.parameters.c_str(), p.description.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fBm Bismut-formula experiments"};
  app.require_subcommand(1);

  std::string run_path, out_dir;
  unsigned workers = 0;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", run_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (default: config 'output' or out/<id>)");
  run->add_option("--workers", workers, "Worker threads (default: hardware concurrency)");
  run->add_flag("--verbose", verbose, "Echo result rows to stderr");

  auto* list = app.add_subcommand("list-presets", "List drift and diffusion presets");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse and check a config without running it");
  validate->add_option("config", validate_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (*run) return cmd_run(run_path, out_dir, workers, verbose);
  if (*list) {
    cmd_list_presets();
    return 0;
  }
  if (*validate) return cmd_validate(validate_path);
  return kExitConfig;
}
