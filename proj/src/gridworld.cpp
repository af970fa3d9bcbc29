#include "offenv/gridworld.hpp"

#include <array>
#include <string>

#include "offenv/errors.hpp"

namespace offenv {
namespace {

Cell apply_move(const GridworldSpec& spec, Cell c, int action) {
  static constexpr std::array<std::array<int, 2>, kGridActions> kDelta{{{0, 1}, {0, -1}, {-1, 0}, {1, 0}}};
  const Cell next{c.x + kDelta[action][0], c.y + kDelta[action][1]};
  if (next.x < 0 || next.x >= spec.width || next.y < 0 || next.y >= spec.height) return c;
  return next;
}

bool inside(const GridworldSpec& spec, Cell c) {
  return c.x >= 0 && c.x < spec.width && c.y >= 0 && c.y < spec.height;
}

Eigen::VectorXd dirichlet_row(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.exponential();
  return v / v.sum();
}

}  // namespace

void GridworldSpec::validate() const {
  if (width <= 0 || height <= 0) throw InvalidModel("grid must have positive size");
  if (!inside(*this, goal)) throw InvalidModel("goal outside grid");
  if (!inside(*this, start)) throw InvalidModel("start outside grid");
  if (goal == start) throw InvalidModel("start and goal must differ");
  if (!(noise_eps >= 0.0 && noise_eps <= 1.0)) throw InvalidModel("noise_eps must lie in [0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidModel("gamma must lie in [0,1)");
  if (!(r_max > 0.0)) throw InvalidModel("r_max must be positive");
  for (double r : {step_reward, goal_reward})
    if (!(r >= 0.0 && r <= r_max)) throw InvalidModel("rewards must lie in [0, r_max]");
}

TabularMDP build_gridworld(const GridworldSpec& spec) {
  spec.validate();
  TabularMDP mdp;
  mdp.n_states = spec.n_states();
  mdp.n_actions = kGridActions;
  mdp.gamma = spec.gamma;
  mdp.r_max = spec.r_max;
  mdp.transition = Eigen::MatrixXd::Zero(mdp.n_pairs(), mdp.n_states);
  mdp.reward_mean = Eigen::MatrixXd::Constant(mdp.n_states, mdp.n_actions, spec.step_reward);
  mdp.initial_dist = Eigen::VectorXd::Zero(mdp.n_states);
  mdp.initial_dist[spec.state(spec.start)] = 1.0;

  const int goal = spec.state(spec.goal);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const Cell c{x, y};
      const int s = spec.state(c);
      for (int a = 0; a < kGridActions; ++a) {
        auto row = mdp.transition.row(mdp.index(s, a));
        if (s == goal) {
          mdp.reward_mean(s, a) = spec.goal_reward;
          row += mdp.initial_dist.transpose();
          continue;
        }
        row[spec.state(apply_move(spec, c, a))] += 1.0 - spec.noise_eps;
        for (int b = 0; b < kGridActions; ++b)
          row[spec.state(apply_move(spec, c, b))] += spec.noise_eps / kGridActions;
      }
    }
  mdp.validate();
  return mdp;
}

MdpPair build_gridworld_pair(const GridworldSpec& spec, double eps_sim, double eps_real) {
  GridworldSpec sim = spec;
  sim.noise_eps = eps_sim;
  GridworldSpec real = spec;
  real.noise_eps = eps_real;
  return MdpPair{build_gridworld(sim), build_gridworld(real)};
}

Policy mix_policy(const Policy& base, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidModel("mix rate must lie in [0,1]");
  base.validate();
  const double u = 1.0 / base.n_actions();
  Policy out{(1.0 - rate) * base.action_probs.array() + rate * u};
  // Re-normalize away rounding so rows sum to 1 within 1e-12.
  for (Eigen::Index s = 0; s < out.action_probs.rows(); ++s)
    out.action_probs.row(s) /= out.action_probs.row(s).sum();
  return out;
}

Policy policy_iteration(const TabularMDP& mdp, int max_iters) {
  mdp.validate();
  Eigen::VectorXi actions = Eigen::VectorXi::Zero(mdp.n_states);
  for (int it = 0; it < max_iters; ++it) {
    const Policy pi = Policy::deterministic(actions, mdp.n_actions);
    const QTable q = q_function(mdp, pi);
    bool changed = false;
    for (int s = 0; s < mdp.n_states; ++s) {
      int best = actions[s];
      for (int a = 0; a < mdp.n_actions; ++a)
        if (q.values(s, a) > q.values(s, best) + 1e-12) best = a;
      // Prefer the lowest index among near-ties.
      for (int a = 0; a < best; ++a)
        if (q.values(s, a) >= q.values(s, best) - 1e-12) {
          best = a;
          break;
        }
      if (best != actions[s]) {
        actions[s] = best;
        changed = true;
      }
    }
    if (!changed) return pi;
  }
  return Policy::deterministic(actions, mdp.n_actions);
}

TabularMDP random_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed, double r_max) {
  Rng rng(seed);
  TabularMDP mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.r_max = r_max;
  mdp.transition.resize(mdp.n_pairs(), n_states);
  for (int x = 0; x < mdp.n_pairs(); ++x) mdp.transition.row(x) = dirichlet_row(n_states, rng).transpose();
  mdp.reward_mean.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) mdp.reward_mean(s, a) = rng.uniform() * r_max;
  mdp.initial_dist = dirichlet_row(n_states, rng);
  mdp.validate();
  return mdp;
}

Policy random_policy(int n_states, int n_actions, std::uint64_t seed) {
  Rng rng(seed);
  Policy pi{Eigen::MatrixXd(n_states, n_actions)};
  for (int s = 0; s < n_states; ++s) pi.action_probs.row(s) = dirichlet_row(n_actions, rng).transpose();
  return pi;
}

}  // namespace offenv
