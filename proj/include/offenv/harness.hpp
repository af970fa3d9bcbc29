#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "offenv/gridworld.hpp"
#include "offenv/kernel.hpp"
#include "offenv/measure.hpp"
#include "offenv/minimax.hpp"
#include "offenv/ratio.hpp"

namespace offenv {

/// Estimator names accepted in ExperimentConfig::estimators.
const std::vector<std::string>& known_estimators();

struct ExperimentConfig {
  GridworldSpec grid;
  double eps_sim = 0.0;
  std::vector<double> eps_real_list;
  std::vector<double> delta_list;  ///< behavior mixing rates
  std::vector<double> alpha_list;  ///< target mixing rates
  std::vector<std::size_t> n_list;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> estimators;
  std::string output_dir = "results";
  std::uint64_t master_seed = 0;

  double sim_ratio = 1.0;        ///< simulator samples per offline sample
  std::size_t n_initial = 0;     ///< initial-state samples; 0 means n
  std::string w_features = "state_indicator";  ///< w class: state_indicator or one_hot
  double weight_cap = 1e6;       ///< C_W
  bool normalize_weights = false;
  double bandwidth = 0.0;        ///< 0 selects the median heuristic
  RatioFitConfig ratio;
  MinimaxFitConfig minimax;

  void validate() const;  ///< throws ConfigError
};

ExperimentConfig config_from_json(const nlohmann::json& j);  ///< throws ConfigError
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

struct ResultRow {
  std::string estimator;
  double eps_real = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double j_hat = 0.0;
  double j_te_exact = 0.0;
  double abs_err = 0.0;
  double sq_err = 0.0;
  std::string error;  ///< empty on success; j_hat and errors are NaN otherwise
};

/// Runs every (eps_real, delta, alpha, n, seed) cell on `jobs` threads. Each
/// cell's datasets derive from derive_seed(master_seed, cell index), so the
/// output does not depend on `jobs`. Rows come back in cell order, then in
/// the order of cfg.estimators. Estimator failures become rows with `error`
/// set.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, int jobs = 1);

/// Exact J_tr(pi).
double baseline_simulator_only(const TabularMDP& mdp_tr, const Policy& pi);

/// Single-ratio MIS: fits w ~ d_te/mu with the same kernel loss as the
/// beta-DICE fit but beta = 1, then returns E_mu[w r].
double baseline_vanilla_mis(const TransitionMeasure& real, const TransitionMeasure& d0,
                            const Policy& pi, double gamma, const ModelClass& w_class,
                            const Kernel& kernel, const MinimaxFitConfig& cfg);

struct MseCell {
  std::string estimator;
  double eps_real = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  std::size_t n = 0;
  std::size_t count = 0;     ///< successful rows
  std::size_t failures = 0;  ///< rows with an error tag
  double mse = 0.0;
  double log10_mse = 0.0;    ///< -inf when mse = 0, NaN when count = 0
};

/// log10 of the mean sq_err per estimator and cell, sorted by key.
std::vector<MseCell> log10_mse_table(const std::vector<ResultRow>& rows);

/// "-inf", "nan" or %.6f.
std::string format_log10(double v);

double median(std::vector<double> values);

/// Least-squares slope of log10(err) against log10(n). Throws DomainError on
/// nonpositive inputs or fewer than two distinct n.
double loglog_slope(const std::vector<double>& n, const std::vector<double>& err);

/// Slope of log10(median abs_err) against log10(n) for one estimator.
double rate_fit(const std::vector<ResultRow>& rows, const std::string& estimator);

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> read_results_csv(const std::string& path);
void write_mse_csv(const std::vector<MseCell>& table, const std::string& path);
/// Plain-text table of log10 MSE and rate slopes.
std::string format_report(const std::vector<ResultRow>& rows);
nlohmann::json sweep_summary(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows);

}  // namespace offenv
