#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "offenv/errors.hpp"
#include "offenv/gridworld.hpp"
#include "offenv/mdp.hpp"
#include "offenv/mdp_io.hpp"

using namespace offenv;

namespace {

TabularMDP two_state_chain() {
  // State 0 moves to 1 under either action; state 1 is absorbing.
  TabularMDP m;
  m.n_states = 2;
  m.n_actions = 2;
  m.transition = Eigen::MatrixXd::Zero(4, 2);
  m.transition(0, 1) = m.transition(1, 1) = 1.0;
  m.transition(2, 1) = m.transition(3, 1) = 1.0;
  m.reward_mean = Eigen::MatrixXd::Zero(2, 2);
  m.reward_mean(1, 0) = m.reward_mean(1, 1) = 1.0;
  m.gamma = 0.5;
  m.initial_dist = Eigen::Vector2d(1.0, 0.0);
  return m;
}

}  // namespace

TEST_CASE("occupancy matches fixed-point iteration and the flow equation") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const int S = 2 + static_cast<int>(seed % 7);
    const int A = 1 + static_cast<int>(seed % 4);
    const TabularMDP m = random_mdp(S, A, 0.9, seed);
    const Policy pi = random_policy(S, A, seed + 100);
    const Occupancy d = state_action_occupancy(m, pi);
    CHECK_NOTHROW(d.validate());
    CHECK((d.dist - fixtures::iterate_occupancy(m, pi)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(bellman_flow_residual(m, pi, d) <= 1e-10);
  }
}

TEST_CASE("two-state chain has a hand-computed occupancy and value") {
  // d(0,.) = (1-g) * 1/2 per action; state 1 holds the remaining g.
  const TabularMDP m = two_state_chain();
  const Policy pi = Policy::uniform(2, 2);
  const Occupancy d = state_action_occupancy(m, pi);
  CHECK(d.dist(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(d.dist(1, 1) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(policy_value(m, pi) == doctest::Approx(0.5).epsilon(1e-14));
  const QTable q = q_function(m, pi);
  CHECK(q.values(1, 0) == doctest::Approx(2.0));
  CHECK(q.values(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("Q and value are consistent") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int S = 1 + static_cast<int>(seed % 8);
    const int A = 1 + static_cast<int>(seed % 4);
    const TabularMDP m = random_mdp(S, A, 0.95, seed);
    const Policy pi = random_policy(S, A, seed * 7 + 1);
    const QTable q = q_function(m, pi);
    CHECK((q.values - fixtures::iterate_q(m, pi)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(bellman_residual(m, pi, q) < 1e-10);
    CHECK(std::abs(policy_value(m, pi) - value_from_q(m, pi, q)) <= 1e-9);
    CHECK(std::abs(policy_value(m, pi) - fixtures::iterate_value(m, pi)) <= 1e-12);
  }
}

TEST_CASE("Monte Carlo occupancy agrees with the exact occupancy") {
  const int n_traj = 20000;
  const int horizon = 200;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMDP m = random_mdp(4, 2, 0.8, seed);
    const Policy pi = random_policy(4, 2, seed + 1);
    const Occupancy exact = state_action_occupancy(m, pi);
    const Occupancy mc = monte_carlo_occupancy(m, pi, horizon, n_traj, seed);
    // Per-trajectory normalized visitation lies in [0,1] with mean d, so its
    // variance is at most d.
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 2; ++a)
        CHECK(std::abs(mc.dist(s, a) - exact.dist(s, a)) <= 5.0 * std::sqrt(exact.dist(s, a) / n_traj) + 1e-12);
  }
}

TEST_CASE("Monte Carlo return agrees with policy_value") {
  const TabularMDP m = random_mdp(5, 3, 0.9, 11);
  const Policy pi = random_policy(5, 3, 12);
  const MonteCarloEstimate mc = monte_carlo_return(m, pi, default_horizon(m, 1e-8), 20000, 3);
  CHECK(std::abs(mc.estimate - policy_value(m, pi)) <= 5.0 * mc.std_error + 1e-8);
}

TEST_CASE("default horizon is the smallest H with a small tail") {
  TabularMDP m = two_state_chain();
  m.gamma = 0.9;
  const int h = default_horizon(m);
  CHECK(std::pow(0.9, h) * 1.0 / 0.1 < 1e-4);
  CHECK(std::pow(0.9, h - 1) * 1.0 / 0.1 >= 1e-4);
}

TEST_CASE("exact weight split") {
  const fixtures::Pair p = fixtures::random_pair(5, 6, 3);
  const Policy pi = random_policy(6, 3, 1);
  const Occupancy mu = state_action_occupancy(p.te, random_policy(6, 3, 2));
  const ExactWeights w = exact_weight_tables(p.te, p.tr, pi, mu);
  const Eigen::MatrixXd d_te = fixtures::iterate_occupancy(p.te, pi);
  const Eigen::MatrixXd d_tr = fixtures::iterate_occupancy(p.tr, pi);
  for (int s = 0; s < 6; ++s)
    for (int a = 0; a < 3; ++a) {
      REQUIRE(w.support(s, a));
      CHECK(w.beta_star(s, a) * w.w_star(s, a) == doctest::Approx(d_te(s, a) / mu.dist(s, a)).epsilon(1e-12));
      CHECK(w.beta_star(s, a) == doctest::Approx(d_tr(s, a) / mu.dist(s, a)).epsilon(1e-10));
    }

  SUBCASE("identical dynamics give w* = 1") {
    const ExactWeights same = exact_weight_tables(p.tr, p.tr, pi, mu);
    CHECK((same.w_star.array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("uncovered pairs are reported") {
    Eigen::MatrixXd probs = pi.action_probs;
    Occupancy gap = mu;
    gap.dist(2, 1) = 0.0;
    gap.dist /= gap.dist.sum();
    try {
      exact_weight_tables(p.te, p.tr, pi, gap);
      FAIL("expected CoverageError");
    } catch (const CoverageError& e) {
      REQUIRE(e.pairs().size() == 1);
      CHECK(e.pairs()[0] == std::pair<int, int>{2, 1});
    }
  }
}

TEST_CASE("model validation") {
  TabularMDP m = two_state_chain();
  CHECK_NOTHROW(m.validate());
  m.transition(1, 0) = 0.5;
  CHECK_THROWS_AS(m.validate(), InvalidModel);
  m = two_state_chain();
  m.reward_mean(0, 0) = 2.0;
  CHECK_THROWS_AS(m.validate(), InvalidModel);
  m = two_state_chain();
  m.gamma = 1.0;
  CHECK_THROWS_AS(m.validate(), InvalidModel);
  Policy pi = Policy::uniform(2, 2);
  pi.action_probs(0, 0) = 0.9;
  CHECK_THROWS_AS(pi.validate(), InvalidModel);
}

TEST_CASE("MDP JSON round trip and loader errors") {
  const TabularMDP m = random_mdp(3, 2, 0.9, 4);
  const TabularMDP back = mdp_from_json(mdp_to_json(m));
  CHECK(back.transition == m.transition);
  CHECK(back.reward_mean == m.reward_mean);
  CHECK(back.initial_dist == m.initial_dist);
  CHECK(back.gamma == m.gamma);
  CHECK(mdp_hash(back) == mdp_hash(m));

  const auto path = (std::filesystem::temp_directory_path() / "offenv_mdp_roundtrip.json").string();
  save_mdp(m, path);
  CHECK(load_mdp(path).transition == m.transition);

  nlohmann::json bad = mdp_to_json(m);
  bad["transition"][1][0][2] = -0.5;
  try {
    mdp_from_json(bad);
    FAIL("expected InvalidModel");
  } catch (const InvalidModel& e) {
    CHECK(std::string(e.what()).find("transition[1][0]") != std::string::npos);
  }
  nlohmann::json missing = mdp_to_json(m);
  missing.erase("gamma");
  CHECK_THROWS_AS(mdp_from_json(missing), InvalidModel);

  const Policy pi = random_policy(3, 2, 9);
  CHECK(policy_from_json(policy_to_json(pi)).action_probs == pi.action_probs);
}
