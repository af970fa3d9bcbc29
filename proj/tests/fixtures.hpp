#pragma once

// Independent reference computations used as test oracles. Nothing here calls
// the library's solvers: occupancies and Q come from fixed-point iteration.

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "offenv/gridworld.hpp"
#include "offenv/mdp.hpp"
#include "offenv/rng.hpp"
#include "offenv/weight_model.hpp"

namespace fixtures {

using offenv::Occupancy;
using offenv::Policy;
using offenv::TabularMDP;

// Sum_t (1-gamma) gamma^t d_t with d_{t+1}(s',a') = sum d_t(s,a) P(s'|s,a) pi(a'|s').
inline Eigen::MatrixXd iterate_occupancy(const TabularMDP& m, const Policy& pi) {
  const int S = m.n_states, A = m.n_actions;
  Eigen::MatrixXd d(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) d(s, a) = m.initial_dist[s] * pi.action_probs(s, a);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(S, A);
  double disc = 1.0 - m.gamma;
  while (disc > 1e-18) {
    total += disc * d;
    Eigen::VectorXd next_s = Eigen::VectorXd::Zero(S);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) next_s += d(s, a) * m.transition.row(s * A + a).transpose();
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) d(s, a) = next_s[s] * pi.action_probs(s, a);
    disc *= m.gamma;
  }
  return total;
}

// Q by repeated Bellman backups.
inline Eigen::MatrixXd iterate_q(const TabularMDP& m, const Policy& pi) {
  const int S = m.n_states, A = m.n_actions;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(S, A);
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd v(S);
    for (int s = 0; s < S; ++s) v[s] = pi.action_probs.row(s).dot(q.row(s));
    Eigen::MatrixXd next(S, A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) next(s, a) = m.reward_mean(s, a) + m.gamma * m.transition.row(s * A + a).dot(v);
    const double diff = (next - q).cwiseAbs().maxCoeff();
    q = next;
    if (diff < 1e-15) break;
  }
  return q;
}

inline double iterate_value(const TabularMDP& m, const Policy& pi) {
  const Eigen::MatrixXd d = iterate_occupancy(m, pi);
  return (d.array() * m.reward_mean.array()).sum();
}

// A simulator/real pair sharing rewards and d0: the real dynamics blend the
// simulator's with an independent random kernel.
struct Pair {
  TabularMDP te;
  TabularMDP tr;
};

inline Pair random_pair(std::uint64_t seed, int S, int A, double gamma = 0.9, double blend = 0.4) {
  Pair p;
  p.tr = offenv::random_mdp(S, A, gamma, seed);
  const TabularMDP other = offenv::random_mdp(S, A, gamma, seed ^ 0x9e3779b97f4a7c15ULL);
  p.te = p.tr;
  p.te.transition = (1.0 - blend) * p.tr.transition + blend * other.transition;
  return p;
}

inline Eigen::MatrixXd random_table(int S, int A, offenv::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd t(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) t(s, a) = rng.uniform(lo, hi);
  return t;
}

inline offenv::WeightModel table_model(const Eigen::MatrixXd& t) { return offenv::WeightModel::tabular(t); }

}  // namespace fixtures

#include "offenv/kernel.hpp"
#include "offenv/measure.hpp"

namespace fixtures {

// Population-mode instance: exact measures for mu x P_te, d_tr x P_tr and d0.
struct Instance {
  Pair env;
  Policy pi;
  Occupancy mu;
  Occupancy d_tr;
  Occupancy d_te;
  offenv::ExactWeights exact;
  offenv::TransitionMeasure real;
  offenv::TransitionMeasure sim;
  offenv::TransitionMeasure d0;

  int S() const { return env.te.n_states; }
  int A() const { return env.te.n_actions; }
  offenv::WeightModel beta_star() const { return table_model(exact.beta_star); }
  offenv::WeightModel w_star() const { return table_model(exact.w_star); }
};

inline Instance make_instance(std::uint64_t seed, int S, int A, double gamma = 0.9) {
  Instance in;
  in.env = random_pair(seed, S, A, gamma);
  in.pi = offenv::random_policy(S, A, seed + 1000);
  in.mu = offenv::state_action_occupancy(in.env.te, offenv::random_policy(S, A, seed + 2000));
  in.d_tr = offenv::state_action_occupancy(in.env.tr, in.pi);
  in.d_te = offenv::state_action_occupancy(in.env.te, in.pi);
  in.exact = offenv::exact_weight_tables(in.env.te, in.env.tr, in.pi, in.mu);
  in.real = offenv::TransitionMeasure::real_population(in.env.te, in.mu);
  in.sim = offenv::TransitionMeasure::simulator_population(in.env.tr, in.d_tr);
  in.d0 = offenv::TransitionMeasure::initial_population(in.env.te);
  return in;
}

// Random element of the RKHS unit ball: sum_i c_i K(x_i, .) scaled to norm 1.
inline offenv::WeightModel unit_ball_function(const offenv::Kernel& k, int S, int A, offenv::Rng& rng) {
  const int n = S * A;
  const int m = 1 + static_cast<int>(rng.uniform() * 5);
  std::vector<int> centers;
  Eigen::VectorXd c(m);
  for (int i = 0; i < m; ++i) {
    centers.push_back(std::min(n - 1, static_cast<int>(rng.uniform() * n)));
    c[i] = rng.uniform(-1.0, 1.0);
  }
  double norm2 = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) norm2 += c[i] * c[j] * k(centers[i], centers[j]);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(S, A);
  for (int x = 0; x < n; ++x)
    for (int i = 0; i < m; ++i) t(x / A, x % A) += c[i] * k(centers[i], x) / std::sqrt(norm2);
  return table_model(t);
}

inline offenv::Kernel random_embedding_kernel(int S, int A, std::uint64_t seed, int dim = 3) {
  offenv::Rng rng(seed);
  Eigen::MatrixXd emb(S * A, dim);
  for (int i = 0; i < S * A; ++i)
    for (int j = 0; j < dim; ++j) emb(i, j) = rng.uniform(-1.0, 1.0);
  return offenv::Kernel(offenv::FeatureMap::custom(emb, S, A, "random_embedding"), 0.8);
}

}  // namespace fixtures
