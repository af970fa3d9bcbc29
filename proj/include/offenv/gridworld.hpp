#pragma once

#include <cstdint>

#include "offenv/mdp.hpp"

namespace offenv {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

/// Four-action gridworld. The intended move succeeds with probability
/// 1 - noise_eps; otherwise one of the four moves is taken uniformly at random.
/// Moves into a wall leave the agent in place. Every action taken in the goal
/// cell earns goal_reward and returns the agent to `start`; all other pairs
/// earn step_reward.
struct GridworldSpec {
  int width = 4;
  int height = 4;
  Cell goal{3, 3};
  Cell start{0, 0};
  double step_reward = 0.0;
  double goal_reward = 1.0;
  double noise_eps = 0.0;
  double gamma = 0.9;
  double r_max = 1.0;

  void validate() const;
  int n_states() const { return width * height; }
  int state(Cell c) const { return c.y * width + c.x; }
};

enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kGridActions = 4;

TabularMDP build_gridworld(const GridworldSpec& spec);

struct MdpPair {
  TabularMDP simulator;  ///< P_tr
  TabularMDP real;       ///< P_te
};

/// Two gridworlds identical except for the noise level.
MdpPair build_gridworld_pair(const GridworldSpec& spec, double eps_sim, double eps_real);

/// (1 - rate) * base + rate * uniform, rowwise.
Policy mix_policy(const Policy& base, double rate);

/// Optimal deterministic policy by exact policy iteration (ties go to the
/// lowest action index).
Policy policy_iteration(const TabularMDP& mdp, int max_iters = 1000);

/// Random MDP with Dirichlet(1) transition rows, uniform rewards in [0, r_max]
/// and a Dirichlet(1) initial distribution.
TabularMDP random_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed,
                      double r_max = 1.0);

/// Random stochastic policy with Dirichlet(1) rows.
Policy random_policy(int n_states, int n_actions, std::uint64_t seed);

}  // namespace offenv
