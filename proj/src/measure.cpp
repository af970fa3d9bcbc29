#include "offenv/measure.hpp"

#include <map>
#include <tuple>

#include "offenv/errors.hpp"

namespace offenv {

TransitionMeasure TransitionMeasure::from_dataset(const TransitionDataset& data, int n_states,
                                                  int n_actions) {
  TransitionMeasure m;
  m.source = data.source;
  m.n_states = n_states;
  m.n_actions = n_actions;
  if (data.empty()) return m;
  struct Group {
    double count = 0.0;
    double reward_sum = 0.0;
  };
  std::map<std::tuple<int, int, int>, Group> groups;
  for (const Transition& t : data.tuples) {
    if (t.s < 0 || t.s >= n_states) throw InvalidModel("dataset state out of range");
    if (data.source != DataSource::initial_dist &&
        (t.a < 0 || t.a >= n_actions || t.s_next < 0 || t.s_next >= n_states))
      throw InvalidModel("dataset action or next state out of range");
    Group& g = groups[{t.s, t.a, t.s_next}];
    g.count += 1.0;
    g.reward_sum += t.r;
  }
  const double n = static_cast<double>(data.size());
  m.items.reserve(groups.size());
  for (const auto& [key, g] : groups) {
    const auto& [s, a, s_next] = key;
    m.items.push_back(WeightedTransition{s, a, g.reward_sum / g.count, s_next, g.count / n});
  }
  return m;
}

namespace {

TransitionMeasure pair_population(const TabularMDP& mdp, const Occupancy& occ, DataSource source) {
  if (occ.dist.rows() != mdp.n_states || occ.dist.cols() != mdp.n_actions)
    throw InvalidModel("occupancy shape does not match MDP");
  TransitionMeasure m;
  m.source = source;
  m.population = true;
  m.n_states = mdp.n_states;
  m.n_actions = mdp.n_actions;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double d = occ.dist(s, a);
      if (d <= 0.0) continue;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double p = mdp.transition(mdp.index(s, a), s2);
        if (p <= 0.0) continue;
        m.items.push_back(WeightedTransition{s, a, mdp.reward_mean(s, a), s2, d * p});
      }
    }
  return m;
}

}  // namespace

TransitionMeasure TransitionMeasure::real_population(const TabularMDP& mdp_te, const Occupancy& mu) {
  return pair_population(mdp_te, mu, DataSource::real_env);
}

TransitionMeasure TransitionMeasure::simulator_population(const TabularMDP& mdp_tr, const Occupancy& d_tr) {
  return pair_population(mdp_tr, d_tr, DataSource::simulator_occupancy);
}

TransitionMeasure TransitionMeasure::initial_population(const TabularMDP& mdp) {
  TransitionMeasure m;
  m.source = DataSource::initial_dist;
  m.population = true;
  m.n_states = mdp.n_states;
  m.n_actions = mdp.n_actions;
  for (int s = 0; s < mdp.n_states; ++s)
    if (mdp.initial_dist[s] > 0.0)
      m.items.push_back(WeightedTransition{s, kNoAction, 0.0, kNoState, mdp.initial_dist[s]});
  return m;
}

double TransitionMeasure::total_weight() const {
  double w = 0.0;
  for (const auto& it : items) w += it.weight;
  return w;
}

void TransitionMeasure::require(DataSource expected, const char* who) const {
  if (source != expected)
    throw SourceMismatch(std::string(who) + ": expected " + to_string(expected) + " data, got " +
                         to_string(source));
}

Eigen::VectorXd pair_mass(const TransitionMeasure& m) {
  if (m.source == DataSource::initial_dist) throw SourceMismatch("pair_mass: initial-state data has no actions");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.n_pairs());
  for (const auto& it : m.items) v[it.s * m.n_actions + it.a] += it.weight;
  return v;
}

Eigen::VectorXd initial_pair_vector(const TransitionMeasure& d0, const Policy& pi) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d0.n_pairs());
  for (const auto& it : d0.items)
    for (int a = 0; a < d0.n_actions; ++a) v[it.s * d0.n_actions + a] += it.weight * pi.action_probs(it.s, a);
  return v;
}

Eigen::VectorXd reward_mass(const TransitionMeasure& m) {
  if (m.source == DataSource::initial_dist) throw SourceMismatch("reward_mass: initial-state data has no rewards");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.n_pairs());
  for (const auto& it : m.items) v[it.s * m.n_actions + it.a] += it.weight * it.r;
  return v;
}

FlowTerms flow_terms(const TransitionMeasure& real, const Eigen::VectorXd& beta, const Policy& pi) {
  const int n = real.n_pairs();
  const int na = real.n_actions;
  if (beta.size() != n) throw InvalidModel("beta must have one value per state-action pair");
  if (pi.n_states() != real.n_states || pi.n_actions() != na) throw InvalidModel("policy shape mismatch");
  FlowTerms out{Eigen::SparseMatrix<double>(n, n), Eigen::VectorXd::Zero(n)};
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(real.items.size() * na);
  for (const auto& it : real.items) {
    const int x = it.s * na + it.a;
    const double wb = it.weight * beta[x];
    out.mass[x] += wb;
    for (int a2 = 0; a2 < na; ++a2) {
      const double p = pi.action_probs(it.s_next, a2);
      if (p != 0.0) trips.emplace_back(x, it.s_next * na + a2, wb * p);
    }
  }
  out.next.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::SparseMatrix<double> FlowTerms::flow_operator(double gamma) const {
  const auto n = mass.size();
  Eigen::SparseMatrix<double> diag(n, n);
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index i = 0; i < n; ++i)
    if (mass[i] != 0.0) trips.emplace_back(i, i, mass[i]);
  diag.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseMatrix<double> a = diag - gamma * Eigen::SparseMatrix<double>(next.transpose());
  a.makeCompressed();
  return a;
}

}  // namespace offenv
