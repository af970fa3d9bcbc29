#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "offenv/dataset.hpp"
#include "offenv/mdp.hpp"

namespace offenv {

struct WeightedTransition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
  double weight = 0.0;
};

/// A finitely supported distribution over transitions, either the empirical
/// distribution of a dataset (duplicate tuples merged, weights count/n,
/// rewards averaged within a group) or an exact population distribution built
/// from occupancy tables. Every estimator is an expectation under one of these,
/// so the same code serves sampled and population modes.
struct TransitionMeasure {
  DataSource source = DataSource::real_env;
  bool population = false;
  int n_states = 0;
  int n_actions = 0;
  std::vector<WeightedTransition> items;

  static TransitionMeasure from_dataset(const TransitionDataset& data, int n_states, int n_actions);
  /// (s,a) ~ mu, s' ~ P_te, r = reward_mean.
  static TransitionMeasure real_population(const TabularMDP& mdp_te, const Occupancy& mu);
  /// (s,a) ~ d_tr, s' ~ P_tr, r = reward_mean.
  static TransitionMeasure simulator_population(const TabularMDP& mdp_tr, const Occupancy& d_tr);
  /// s ~ d0.
  static TransitionMeasure initial_population(const TabularMDP& mdp);

  bool empty() const { return items.empty(); }
  double total_weight() const;
  int n_pairs() const { return n_states * n_actions; }

  /// Throws SourceMismatch unless `source == expected`.
  void require(DataSource expected, const char* who) const;
};

/// Per-pair mass: sum of item weights at (s,a). Not defined for initial_dist.
Eigen::VectorXd pair_mass(const TransitionMeasure& m);

/// sum_j weight_j pi(.|s_j) placed on pairs (s_j, .).
Eigen::VectorXd initial_pair_vector(const TransitionMeasure& d0, const Policy& pi);

/// Reward mass per pair: sum_i weight_i r_i at (s_i, a_i).
Eigen::VectorXd reward_mass(const TransitionMeasure& m);

/// Reweighted next-pair operator of a transition measure:
/// G(x, y) = sum_{i: x_i = x} weight_i beta(x) pi(a_y | s'_i) [s_y = s'_i],
/// together with m(x) = sum_{i: x_i = x} weight_i beta(x).
struct FlowTerms {
  Eigen::SparseMatrix<double> next;  ///< G
  Eigen::VectorXd mass;              ///< m

  /// A = diag(m) - gamma G^T, so that A w = sum_i weight_i beta w(x_i) (e_{x_i} - gamma pi_{s'_i}).
  Eigen::SparseMatrix<double> flow_operator(double gamma) const;
};

/// `beta` holds one value per pair (flattened s*A + a).
FlowTerms flow_terms(const TransitionMeasure& real, const Eigen::VectorXd& beta, const Policy& pi);

}  // namespace offenv
