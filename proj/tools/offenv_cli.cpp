// offenv: environment generation, estimator sweeps and reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "offenv/errors.hpp"
#include "offenv/gridworld.hpp"
#include "offenv/harness.hpp"
#include "offenv/mdp_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", eps);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw offenv::Error("cannot write " + path.string());
  out << text;
}

offenv::ExperimentConfig load(const std::string& path, const std::string& out_dir,
                              std::optional<std::uint64_t> seed) {
  offenv::ExperimentConfig cfg = offenv::load_config(path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (seed) cfg.master_seed = *seed;
  return cfg;
}

int gen_env(const offenv::ExperimentConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  for (double eps : cfg.eps_real_list) {
    const offenv::MdpPair envs = offenv::build_gridworld_pair(cfg.grid, cfg.eps_sim, eps);
    offenv::save_mdp(envs.simulator, (dir / ("mdp_sim_eps" + eps_tag(cfg.eps_sim) + ".json")).string());
    offenv::save_mdp(envs.real, (dir / ("mdp_real_eps" + eps_tag(eps) + ".json")).string());
    const offenv::Policy base = offenv::policy_iteration(envs.simulator);
    write_text(dir / "base_policy.json", offenv::policy_to_json(base).dump(2) + "\n");
  }
  std::cout << "wrote environments to " << dir.string() << "\n";
  return 0;
}

int sweep(const offenv::ExperimentConfig& cfg, int jobs) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const auto rows = offenv::run_sweep(cfg, jobs);
  offenv::write_results_csv(rows, (dir / "results.csv").string());
  write_text(dir / "summary.json", offenv::sweep_summary(cfg, rows).dump(2) + "\n");
  std::size_t failures = 0;
  for (const auto& r : rows) failures += r.error.empty() ? 0 : 1;
  std::cout << rows.size() << " rows (" << failures << " failed) written to " << (dir / "results.csv").string()
            << "\n";
  return 0;
}

int report(const std::string& results, const std::string& out_dir) {
  const auto rows = offenv::read_results_csv(results);
  const std::string text = offenv::format_report(rows);
  std::cout << text;
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    offenv::write_mse_csv(offenv::log10_mse_table(rows), (dir / "log10_mse.csv").string());
    write_text(dir / "report.txt", text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-environment policy evaluation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string results_path;

  auto* gen = app.add_subcommand("gen-env", "Write the simulator and real MDPs of a config as JSON");
  gen->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_dir, "Output directory (overrides output_dir)");

  auto* sw = app.add_subcommand("sweep", "Run a sweep and write results.csv and summary.json");
  sw->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  sw->add_option("--seed", seed, "Master seed (overrides master_seed)");
  sw->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "Summarize a results CSV: log10 MSE table and rate slopes");
  rep->add_option("results", results_path, "results.csv from a sweep")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", out_dir, "Directory for log10_mse.csv and report.txt");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_env(load(config_path, out_dir, std::nullopt));
    if (*sw) return sweep(load(config_path, out_dir, seed), jobs);
    if (*rep) return report(results_path, out_dir);
  } catch (const offenv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
