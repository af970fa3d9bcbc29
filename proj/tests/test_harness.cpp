#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "offenv/errors.hpp"
#include "offenv/harness.hpp"

using namespace offenv;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.grid.width = 3;
  cfg.grid.height = 3;
  cfg.grid.goal = {2, 2};
  cfg.eps_sim = 0.0;
  cfg.eps_real_list = {0.0, 0.2};
  cfg.delta_list = {0.3};
  cfg.alpha_list = {0.1};
  cfg.n_list = {3000};
  cfg.seeds = {4, 5};
  cfg.estimators = {"oracle", "simulator_only", "beta_dice_linear", "q_route"};
  cfg.master_seed = 3;
  return cfg;
}

ResultRow row(const std::string& est, std::size_t n, double err, std::uint64_t seed = 0) {
  ResultRow r;
  r.estimator = est;
  r.n = n;
  r.seed = seed;
  r.j_te_exact = 1.0;
  r.j_hat = 1.0 + err;
  r.abs_err = std::abs(err);
  r.sq_err = err * err;
  return r;
}

}  // namespace

TEST_CASE("sweep rows: oracle exact, simulator-only independent of data") {
  const ExperimentConfig cfg = small_config();
  const auto rows = run_sweep(cfg, 2);
  CHECK(rows.size() == 2 * 2 * 4);
  std::map<double, double> sim_only;
  for (const auto& r : rows) {
    CHECK(r.error.empty());
    CHECK(std::abs(r.abs_err - std::abs(r.j_hat - r.j_te_exact)) <= 1e-12);
    if (r.estimator == "oracle") CHECK(r.abs_err == 0.0);
    if (r.estimator == "simulator_only") {
      if (r.eps_real == cfg.eps_sim) CHECK(r.abs_err == 0.0);
      if (sim_only.count(r.eps_real)) CHECK(sim_only[r.eps_real] == r.j_hat);
      sim_only[r.eps_real] = r.j_hat;
    }
  }
  // Each (estimator, cell) appears once per seed.
  std::set<std::tuple<std::string, double, std::uint64_t>> seen;
  for (const auto& r : rows) CHECK(seen.insert({r.estimator, r.eps_real, r.seed}).second);
}

TEST_CASE("sweeps do not depend on the number of jobs") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {"beta_dice_rkhs", "vanilla_mis", "beta_gradient_dice"};
  const auto a = run_sweep(cfg, 1);
  const auto b = run_sweep(cfg, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].estimator == b[i].estimator);
    CHECK(a[i].j_hat == b[i].j_hat);
  }
}

TEST_CASE("estimator failures become rows") {
  ExperimentConfig cfg = small_config();
  cfg.n_list = {5};  // far too little data for an invertible one-hot system
  cfg.w_features = "one_hot";
  cfg.minimax.ridge_eps = 0.0;
  cfg.estimators = {"oracle", "beta_dice_linear"};
  const auto rows = run_sweep(cfg);
  bool failed = false;
  for (const auto& r : rows) {
    if (r.estimator == "oracle") CHECK(r.error.empty());
    if (!r.error.empty()) {
      failed = true;
      CHECK(std::isnan(r.j_hat));
    }
  }
  CHECK(failed);
  const auto table = log10_mse_table(rows);
  for (const auto& c : table)
    if (c.estimator == "beta_dice_linear") CHECK(c.failures > 0);
}

TEST_CASE("log10 MSE table") {
  std::vector<ResultRow> rows{row("a", 10, 0.0), row("a", 10, 0.0, 1), row("b", 10, 0.1)};
  const auto t = log10_mse_table(rows);
  REQUIRE(t.size() == 2);
  CHECK(format_log10(t[0].log10_mse) == "-inf");
  CHECK(t[1].log10_mse == doctest::Approx(-2.0));
  // Independent recomputation of a mixed cell.
  rows = {row("c", 5, 0.1), row("c", 5, -0.3, 1), row("c", 5, 0.2, 2)};
  CHECK(log10_mse_table(rows)[0].log10_mse == doctest::Approx(std::log10((0.01 + 0.09 + 0.04) / 3.0)));
}

TEST_CASE("rate fits") {
  std::vector<ResultRow> rows;
  for (std::size_t n : {1000u, 4000u, 16000u, 64000u})
    for (std::uint64_t s = 0; s < 3; ++s) rows.push_back(row("sqrt", n, 0.7 / std::sqrt(double(n)), s));
  CHECK(rate_fit(rows, "sqrt") == doctest::Approx(-0.5).epsilon(1e-9));
  rows.clear();
  for (std::size_t n : {100u, 200u}) rows.push_back(row("flat", n, 0.3));
  CHECK(std::abs(rate_fit(rows, "flat")) < 1e-12);
  CHECK_THROWS_AS(rate_fit(rows, "missing"), DomainError);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("config parsing and validation") {
  const nlohmann::json good = config_to_json(small_config());
  const ExperimentConfig back = config_from_json(good);
  CHECK(back.eps_real_list == small_config().eps_real_list);
  CHECK(back.estimators == small_config().estimators);
  CHECK(config_to_json(back) == good);

  auto broken = [&](auto&& edit) {
    nlohmann::json j = good;
    edit(j);
    return j;
  };
  CHECK_THROWS_AS(config_from_json(broken([](auto& j) { j["seeds"] = {1, 1}; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(broken([](auto& j) { j["n_list"] = nlohmann::json::array(); })), ConfigError);
  CHECK_THROWS_AS(config_from_json(broken([](auto& j) { j["estimators"] = {"magic"}; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(broken([](auto& j) { j["delta_list"] = {1.5}; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(broken([](auto& j) { j["grid"]["goal"] = {9, 9}; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(broken([](auto& j) { j["typo"] = 1; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(broken([](auto& j) { j["n_list"] = "many"; })), ConfigError);
}

TEST_CASE("results CSV round trip is exact") {
  auto rows = run_sweep(small_config());
  rows.push_back(row("x", 3, 0.0));
  rows.back().error = "failed, with \"quotes\"";
  const auto dir = std::filesystem::temp_directory_path();
  const auto p1 = (dir / "offenv_results_a.csv").string();
  const auto p2 = (dir / "offenv_results_b.csv").string();
  write_results_csv(rows, p1);
  const auto back = read_results_csv(p1);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].j_hat == rows[i].j_hat);
    CHECK(back[i].error == rows[i].error);
  }
  write_results_csv(back, p2);
  std::ifstream a(p1), b(p2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(format_report(back).find("rate slopes") != std::string::npos);
}

TEST_CASE("baselines") {
  const MdpPair p = build_gridworld_pair(GridworldSpec{}, 0.1, 0.1);
  const Policy pi = mix_policy(policy_iteration(p.simulator), 0.2);
  CHECK(baseline_simulator_only(p.simulator, pi) == policy_value(p.real, pi));

  // Behavior = target in one environment: the single ratio is 1 and MIS
  // reduces to the empirical mean reward.
  const Occupancy d = state_action_occupancy(p.real, pi);
  const auto real = TransitionMeasure::from_dataset(sample_offline_dataset(p.real, d, 40000, 1), 16, 4);
  const auto d0 = TransitionMeasure::from_dataset(sample_initial_states(p.real, 40000, 2), 16, 4);
  const auto one_hot = std::make_shared<const FeatureMap>(FeatureMap::one_hot(16, 4));
  const Kernel k(FeatureMap::one_hot(16, 4), std::sqrt(2.0));
  MinimaxFitConfig cfg;
  cfg.max_iters = 20000;
  const double est = baseline_vanilla_mis(real, d0, pi, 0.9, ModelClass::linear(one_hot, 0.0, 1e6), k, cfg);
  CHECK(std::abs(est - policy_value(p.real, pi)) < 0.01);

  // One-hot population with a different behavior policy: exact.
  const Occupancy mu = state_action_occupancy(p.real, Policy::uniform(16, 4));
  const auto real_pop = TransitionMeasure::real_population(p.real, mu);
  const auto d0_pop = TransitionMeasure::initial_population(p.real);
  MinimaxFitConfig exact_cfg;
  exact_cfg.max_iters = 1000000;
  exact_cfg.objective_tol = 1e-26;
  const double pop = baseline_vanilla_mis(real_pop, d0_pop, pi, 0.9, ModelClass::linear(one_hot, 0.0, 1e6), k,
                                          exact_cfg);
  CHECK(std::abs(pop - policy_value(p.real, pi)) <= 1e-9);
}
