#include <doctest.h>

#include <cmath>

#include "offenv/gridworld.hpp"
#include "offenv/mdp.hpp"

using namespace offenv;

TEST_CASE("gridworld pair with equal noise is identical") {
  const MdpPair p = build_gridworld_pair(GridworldSpec{}, 0.2, 0.2);
  CHECK(p.simulator.transition == p.real.transition);
  CHECK(p.simulator.reward_mean == p.real.reward_mean);
}

TEST_CASE("noise-free gridworld is deterministic") {
  const TabularMDP m = build_gridworld(GridworldSpec{});
  for (int i = 0; i < m.n_pairs(); ++i) {
    CHECK(m.transition.row(i).maxCoeff() == 1.0);
    CHECK(m.transition.row(i).sum() == doctest::Approx(1.0));
  }
  GridworldSpec spec;
  // Moving right from (0,0) reaches (1,0); moving down hits the wall.
  CHECK(m.transition(m.index(spec.state({0, 0}), kRight), spec.state({1, 0})) == 1.0);
  CHECK(m.transition(m.index(spec.state({0, 0}), kDown), spec.state({0, 0})) == 1.0);
  // Any action at the goal pays and resets.
  CHECK(m.reward_mean(spec.state(spec.goal), kLeft) == 1.0);
  CHECK(m.transition(m.index(spec.state(spec.goal), kLeft), spec.state(spec.start)) == 1.0);
}

TEST_CASE("noisy moves follow the four-move kernel") {
  GridworldSpec spec;
  spec.noise_eps = 0.2;
  const TabularMDP m = build_gridworld(spec);
  // From (1,1) every move is legal: intended 0.8 + 0.05, others 0.05 each.
  const int s = spec.state({1, 1});
  const int row = m.index(s, kUp);
  CHECK(m.transition(row, spec.state({1, 2})) == doctest::Approx(0.85));
  CHECK(m.transition(row, spec.state({1, 0})) == doctest::Approx(0.05));
  CHECK(m.transition(row, spec.state({0, 1})) == doctest::Approx(0.05));
  CHECK(m.transition(row, spec.state({2, 1})) == doctest::Approx(0.05));
}

TEST_CASE("simulator gap is positive and grows with the real noise") {
  const GridworldSpec spec;
  const Policy greedy = policy_iteration(build_gridworld(spec));
  double last = 0.0;
  for (double eps : {0.1, 0.2, 0.3}) {
    const MdpPair p = build_gridworld_pair(spec, 0.0, eps);
    const double gap = std::abs(policy_value(p.simulator, greedy) - policy_value(p.real, greedy));
    CHECK(gap > 0.0);
    CHECK(gap >= last);
    last = gap;
  }
}

TEST_CASE("policy mixing") {
  Eigen::VectorXi acts(2);
  acts << 0, 1;
  const Policy base = Policy::deterministic(acts, 2);
  CHECK(mix_policy(base, 0.0).action_probs == base.action_probs);
  CHECK((mix_policy(base, 1.0).action_probs.array() - 0.5).abs().maxCoeff() < 1e-15);
  const Policy half = mix_policy(base, 0.5);
  CHECK(half.action_probs(0, 0) == doctest::Approx(0.75));
  CHECK(half.action_probs(0, 1) == doctest::Approx(0.25));
  CHECK(std::abs(half.action_probs.row(1).sum() - 1.0) <= 1e-12);
}

TEST_CASE("policy iteration is greedy with respect to its own Q") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularMDP m = random_mdp(6, 3, 0.9, seed);
    const Policy pi = policy_iteration(m);
    const QTable q = q_function(m, pi);
    for (int s = 0; s < 6; ++s) {
      int a_star = 0;
      for (int a = 0; a < 3; ++a)
        if (pi.action_probs(s, a) == 1.0) a_star = a;
      CHECK(q.values(s, a_star) >= q.values.row(s).maxCoeff() - 1e-10);
    }
    for (std::uint64_t k = 0; k < 5; ++k)
      CHECK(policy_value(m, pi) >= policy_value(m, random_policy(6, 3, seed * 10 + k)) - 1e-12);
  }
}

TEST_CASE("grid settings validation") {
  GridworldSpec spec;
  spec.goal = {4, 0};
  CHECK_THROWS(spec.validate());
  spec = GridworldSpec{};
  spec.noise_eps = 1.5;
  CHECK_THROWS(spec.validate());
}
