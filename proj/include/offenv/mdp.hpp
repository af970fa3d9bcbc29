#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "offenv/rng.hpp"

namespace offenv {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Largest state-action space handled by the dense solvers.
inline constexpr int kMaxStateActionPairs = 10000;

/// Finite discounted MDP. `transition` is (S*A) x S with row s*A + a holding
/// P(.|s,a); rewards are `reward_mean` plus optional uniform noise of the given
/// half-width, clipped to [0, r_max].
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  Eigen::MatrixXd transition;
  Eigen::MatrixXd reward_mean;
  double reward_noise_halfwidth = 0.0;
  double gamma = 0.9;
  Eigen::VectorXd initial_dist;
  double r_max = 1.0;

  int n_pairs() const { return n_states * n_actions; }
  int index(int s, int a) const { return s * n_actions + a; }

  /// Throws InvalidModel naming the first violated invariant and its indices.
  void validate() const;

  double sample_reward(int s, int a, Rng& rng) const;
};

/// Stochastic policy, action_probs(s, a) = pi(a|s).
struct Policy {
  Eigen::MatrixXd action_probs;

  int n_states() const { return static_cast<int>(action_probs.rows()); }
  int n_actions() const { return static_cast<int>(action_probs.cols()); }

  void validate() const;

  static Policy uniform(int n_states, int n_actions);
  static Policy deterministic(const Eigen::VectorXi& actions, int n_actions);
};

/// Normalized discounted state-action occupancy, dist(s, a).
struct Occupancy {
  Eigen::MatrixXd dist;

  void validate() const;
  /// Row-major flattening, entry s*A + a.
  Eigen::VectorXd flat() const;
  Mask support() const { return dist.array() > 0.0; }
};

struct QTable {
  Eigen::MatrixXd values;
};

/// P_pi over state-action pairs: P_pi[(s,a),(s',a')] = P(s'|s,a) pi(a'|s').
Eigen::MatrixXd pair_transition(const TabularMDP& mdp, const Policy& pi);

/// d = (1-gamma) d0 x pi + gamma P_pi^T d, solved with a dense LU.
Occupancy state_action_occupancy(const TabularMDP& mdp, const Policy& pi);

/// Normalized return sum_{s,a} d(s,a) R(s,a).
double policy_value(const TabularMDP& mdp, const Policy& pi);
double policy_value(const TabularMDP& mdp, const Occupancy& occ);

/// Q = R + gamma P_pi Q.
QTable q_function(const TabularMDP& mdp, const Policy& pi);

/// V(s) = sum_a pi(a|s) Q(s,a).
Eigen::VectorXd state_values(const QTable& q, const Policy& pi);

/// (1-gamma) E_{s~d0}[Q(s, pi)].
double value_from_q(const TabularMDP& mdp, const Policy& pi, const QTable& q);

/// max_{s,a} |d - (1-gamma) d0 pi - gamma P_pi^T d|.
double bellman_flow_residual(const TabularMDP& mdp, const Policy& pi, const Occupancy& occ);

/// max_{s,a} |Q - R - gamma P_pi Q|.
double bellman_residual(const TabularMDP& mdp, const Policy& pi, const QTable& q);

struct ExactWeights {
  Eigen::MatrixXd beta_star;  ///< d_tr / mu on the support, 0 elsewhere
  Eigen::MatrixXd w_star;     ///< d_te / d_tr on the support, 0 elsewhere
  Mask support;               ///< pairs with d_tr > 0
};

/// Exact split of d_te/mu into beta* = d_tr/mu and w* = d_te/d_tr.
/// Throws CoverageError if mu misses mass of either occupancy, or if d_te has
/// mass where d_tr has none.
ExactWeights exact_weight_tables(const TabularMDP& mdp_te, const TabularMDP& mdp_tr,
                                 const Policy& pi, const Occupancy& mu);

/// Smallest H with gamma^H r_max / (1-gamma) < tol.
int default_horizon(const TabularMDP& mdp, double tol = 1e-4);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// (1-gamma) times the mean truncated discounted return over n_traj rollouts.
MonteCarloEstimate monte_carlo_return(const TabularMDP& mdp, const Policy& pi, int horizon,
                                      int n_traj, std::uint64_t seed);

/// Normalized discounted visitation counts over n_traj truncated rollouts.
Occupancy monte_carlo_occupancy(const TabularMDP& mdp, const Policy& pi, int horizon,
                                int n_traj, std::uint64_t seed);

}  // namespace offenv
