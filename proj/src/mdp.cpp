#include "offenv/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "offenv/errors.hpp"

namespace offenv {
namespace {

constexpr double kSumTol = 1e-12;
// Occupancy entries below this are solver noise on unreachable pairs.
constexpr double kZeroMass = 1e-14;

template <typename... Parts>
std::string cat(const Parts&... parts) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << parts);
  return os.str();
}

void check_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const std::string& where) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (!(row[j] >= 0.0)) throw InvalidModel(cat(where, " has negative or NaN entry at ", j));
  }
  const double sum = row.sum();
  if (std::abs(sum - 1.0) > kSumTol) throw InvalidModel(cat(where, " sums to ", sum));
}

Eigen::VectorXd start_pairs(const TabularMDP& mdp, const Policy& pi) {
  Eigen::VectorXd v(mdp.n_pairs());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      v[mdp.index(s, a)] = mdp.initial_dist[s] * pi.action_probs(s, a);
  return v;
}

Eigen::VectorXd flat_rewards(const TabularMDP& mdp) {
  Eigen::VectorXd r(mdp.n_pairs());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) r[mdp.index(s, a)] = mdp.reward_mean(s, a);
  return r;
}

void check_compatible(const TabularMDP& mdp, const Policy& pi) {
  mdp.validate();
  pi.validate();
  if (pi.n_states() != mdp.n_states || pi.n_actions() != mdp.n_actions)
    throw InvalidModel("policy shape does not match MDP");
  if (mdp.n_pairs() > kMaxStateActionPairs)
    throw InvalidModel(cat("state-action space of ", mdp.n_pairs(), " exceeds cap ",
                           kMaxStateActionPairs));
}

Eigen::VectorXd solve_dense(const Eigen::MatrixXd& lhs, const Eigen::VectorXd& rhs,
                            const char* what) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
  if (!lu.isInvertible()) throw SingularSystem(cat(what, ": singular linear system"));
  Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw SingularSystem(cat(what, ": non-finite solution"));
  return x;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int s = 0; s < rows; ++s)
    for (int a = 0; a < cols; ++a) m(s, a) = v[s * cols + a];
  return m;
}

std::vector<CategoricalSampler> row_samplers(const Eigen::MatrixXd& rows) {
  std::vector<CategoricalSampler> out;
  out.reserve(rows.rows());
  std::vector<double> buf(rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) buf[j] = rows(i, j);
    out.emplace_back(buf);
  }
  return out;
}

}  // namespace

void TabularMDP::validate() const {
  if (n_states <= 0 || n_actions <= 0) throw InvalidModel("MDP needs at least one state and action");
  if (transition.rows() != n_pairs() || transition.cols() != n_states)
    throw InvalidModel(cat("transition must be ", n_pairs(), "x", n_states));
  if (reward_mean.rows() != n_states || reward_mean.cols() != n_actions)
    throw InvalidModel(cat("reward_mean must be ", n_states, "x", n_actions));
  if (initial_dist.size() != n_states) throw InvalidModel("initial_dist has wrong length");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidModel(cat("gamma ", gamma, " not in [0,1)"));
  if (!(r_max > 0.0)) throw InvalidModel("r_max must be positive");
  if (!(reward_noise_halfwidth >= 0.0)) throw InvalidModel("reward noise half-width must be >= 0");
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a)
      check_row(transition.row(index(s, a)), cat("transition[", s, "][", a, "]"));
  check_row(initial_dist.transpose(), "initial_dist");
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      const double r = reward_mean(s, a);
      if (!(r >= 0.0 && r <= r_max))
        throw InvalidModel(cat("reward_mean[", s, "][", a, "] = ", r, " outside [0, ", r_max, "]"));
    }
}

double TabularMDP::sample_reward(int s, int a, Rng& rng) const {
  const double mean = reward_mean(s, a);
  if (reward_noise_halfwidth == 0.0) return mean;
  const double r = mean + rng.uniform(-reward_noise_halfwidth, reward_noise_halfwidth);
  return std::clamp(r, 0.0, r_max);
}

void Policy::validate() const {
  if (action_probs.rows() == 0 || action_probs.cols() == 0) throw InvalidModel("empty policy");
  for (Eigen::Index s = 0; s < action_probs.rows(); ++s)
    check_row(action_probs.row(s), cat("policy[", s, "]"));
}

Policy Policy::uniform(int n_states, int n_actions) {
  return Policy{Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions)};
}

Policy Policy::deterministic(const Eigen::VectorXi& actions, int n_actions) {
  Policy pi{Eigen::MatrixXd::Zero(actions.size(), n_actions)};
  for (Eigen::Index s = 0; s < actions.size(); ++s) pi.action_probs(s, actions[s]) = 1.0;
  return pi;
}

void Occupancy::validate() const {
  if ((dist.array() < 0.0).any()) throw InvalidModel("occupancy has negative entries");
  const double sum = dist.sum();
  if (std::abs(sum - 1.0) > 1e-10) throw InvalidModel(cat("occupancy sums to ", sum));
}

Eigen::VectorXd Occupancy::flat() const {
  Eigen::VectorXd v(dist.size());
  for (Eigen::Index s = 0; s < dist.rows(); ++s)
    for (Eigen::Index a = 0; a < dist.cols(); ++a) v[s * dist.cols() + a] = dist(s, a);
  return v;
}

Eigen::MatrixXd pair_transition(const TabularMDP& mdp, const Policy& pi) {
  const int n = mdp.n_pairs();
  Eigen::MatrixXd p(n, n);
  for (int x = 0; x < n; ++x)
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
      const double ps = mdp.transition(x, s2);
      for (int a2 = 0; a2 < mdp.n_actions; ++a2)
        p(x, mdp.index(s2, a2)) = ps * pi.action_probs(s2, a2);
    }
  return p;
}

Occupancy state_action_occupancy(const TabularMDP& mdp, const Policy& pi) {
  check_compatible(mdp, pi);
  const int n = mdp.n_pairs();
  const Eigen::MatrixXd lhs =
      Eigen::MatrixXd::Identity(n, n) - mdp.gamma * pair_transition(mdp, pi).transpose();
  Eigen::VectorXd d = solve_dense(lhs, (1.0 - mdp.gamma) * start_pairs(mdp, pi), "occupancy");
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (std::abs(d[i]) < kZeroMass) d[i] = 0.0;
  if ((d.array() < 0.0).any()) throw SingularSystem("occupancy solve produced negative mass");
  d /= d.sum();
  return Occupancy{unflatten(d, mdp.n_states, mdp.n_actions)};
}

double policy_value(const TabularMDP& mdp, const Occupancy& occ) {
  return (occ.dist.array() * mdp.reward_mean.array()).sum();
}

double policy_value(const TabularMDP& mdp, const Policy& pi) {
  return policy_value(mdp, state_action_occupancy(mdp, pi));
}

QTable q_function(const TabularMDP& mdp, const Policy& pi) {
  check_compatible(mdp, pi);
  const int n = mdp.n_pairs();
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - mdp.gamma * pair_transition(mdp, pi);
  const Eigen::VectorXd q = solve_dense(lhs, flat_rewards(mdp), "q_function");
  return QTable{unflatten(q, mdp.n_states, mdp.n_actions)};
}

Eigen::VectorXd state_values(const QTable& q, const Policy& pi) {
  return (q.values.array() * pi.action_probs.array()).rowwise().sum();
}

double value_from_q(const TabularMDP& mdp, const Policy& pi, const QTable& q) {
  return (1.0 - mdp.gamma) * mdp.initial_dist.dot(state_values(q, pi));
}

double bellman_flow_residual(const TabularMDP& mdp, const Policy& pi, const Occupancy& occ) {
  const Eigen::VectorXd d = occ.flat();
  const Eigen::VectorXd rhs =
      (1.0 - mdp.gamma) * start_pairs(mdp, pi) + mdp.gamma * pair_transition(mdp, pi).transpose() * d;
  return (d - rhs).cwiseAbs().maxCoeff();
}

double bellman_residual(const TabularMDP& mdp, const Policy& pi, const QTable& q) {
  const Eigen::MatrixXd qv = q.values;
  Eigen::VectorXd qf(mdp.n_pairs());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) qf[mdp.index(s, a)] = qv(s, a);
  const Eigen::VectorXd rhs = flat_rewards(mdp) + mdp.gamma * pair_transition(mdp, pi) * qf;
  return (qf - rhs).cwiseAbs().maxCoeff();
}

ExactWeights exact_weight_tables(const TabularMDP& mdp_te, const TabularMDP& mdp_tr,
                                 const Policy& pi, const Occupancy& mu) {
  const Occupancy d_te = state_action_occupancy(mdp_te, pi);
  const Occupancy d_tr = state_action_occupancy(mdp_tr, pi);
  if (mu.dist.rows() != mdp_te.n_states || mu.dist.cols() != mdp_te.n_actions)
    throw InvalidModel("mu shape does not match MDP");

  std::vector<std::pair<int, int>> uncovered;
  std::vector<std::pair<int, int>> sim_uncovered;
  for (int s = 0; s < mdp_te.n_states; ++s)
    for (int a = 0; a < mdp_te.n_actions; ++a) {
      const bool needed = d_tr.dist(s, a) > 0.0 || d_te.dist(s, a) > 0.0;
      if (needed && !(mu.dist(s, a) > 0.0)) uncovered.emplace_back(s, a);
      if (d_te.dist(s, a) > 0.0 && !(d_tr.dist(s, a) > 0.0)) sim_uncovered.emplace_back(s, a);
    }
  auto describe = [](const std::vector<std::pair<int, int>>& pairs) {
    std::ostringstream os;
    for (const auto& [s, a] : pairs) os << " (" << s << "," << a << ")";
    return os.str();
  };
  if (!uncovered.empty())
    throw CoverageError("mu has no mass on pairs visited by pi:" + describe(uncovered), uncovered);
  if (!sim_uncovered.empty())
    throw CoverageError("simulator occupancy misses pairs visited in the target:" +
                            describe(sim_uncovered),
                        sim_uncovered);

  ExactWeights out{Eigen::MatrixXd::Zero(mdp_te.n_states, mdp_te.n_actions),
                   Eigen::MatrixXd::Zero(mdp_te.n_states, mdp_te.n_actions),
                   d_tr.dist.array() > 0.0};
  for (int s = 0; s < mdp_te.n_states; ++s)
    for (int a = 0; a < mdp_te.n_actions; ++a) {
      if (!out.support(s, a)) continue;
      out.beta_star(s, a) = d_tr.dist(s, a) / mu.dist(s, a);
      out.w_star(s, a) = d_te.dist(s, a) / d_tr.dist(s, a);
    }
  return out;
}

int default_horizon(const TabularMDP& mdp, double tol) {
  if (mdp.gamma == 0.0) return 1;
  int h = 0;
  double tail = mdp.r_max / (1.0 - mdp.gamma);
  while (!(tail < tol)) {
    tail *= mdp.gamma;
    ++h;
  }
  return h;
}

namespace {

struct Rollout {
  std::vector<CategoricalSampler> policy;
  std::vector<CategoricalSampler> next_state;
  CategoricalSampler start;
};

Rollout make_rollout(const TabularMDP& mdp, const Policy& pi) {
  check_compatible(mdp, pi);
  std::vector<double> d0(mdp.initial_dist.data(), mdp.initial_dist.data() + mdp.n_states);
  return Rollout{row_samplers(pi.action_probs), row_samplers(mdp.transition), CategoricalSampler(d0)};
}

}  // namespace

MonteCarloEstimate monte_carlo_return(const TabularMDP& mdp, const Policy& pi, int horizon,
                                      int n_traj, std::uint64_t seed) {
  const Rollout roll = make_rollout(mdp, pi);
  Rng rng(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int k = 0; k < n_traj; ++k) {
    int s = roll.start.sample(rng);
    double discount = 1.0;
    double ret = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const int a = roll.policy[s].sample(rng);
      ret += discount * mdp.sample_reward(s, a, rng);
      discount *= mdp.gamma;
      s = roll.next_state[mdp.index(s, a)].sample(rng);
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  MonteCarloEstimate out;
  if (n_traj <= 0) return out;
  const double mean = sum / n_traj;
  const double var = n_traj > 1 ? std::max(0.0, (sum_sq - n_traj * mean * mean) / (n_traj - 1)) : 0.0;
  out.estimate = (1.0 - mdp.gamma) * mean;
  out.std_error = (1.0 - mdp.gamma) * std::sqrt(var / n_traj);
  return out;
}

Occupancy monte_carlo_occupancy(const TabularMDP& mdp, const Policy& pi, int horizon, int n_traj,
                                std::uint64_t seed) {
  const Rollout roll = make_rollout(mdp, pi);
  Rng rng(seed);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
  for (int k = 0; k < n_traj; ++k) {
    int s = roll.start.sample(rng);
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const int a = roll.policy[s].sample(rng);
      counts(s, a) += discount;
      discount *= mdp.gamma;
      s = roll.next_state[mdp.index(s, a)].sample(rng);
    }
  }
  const double total = counts.sum();
  if (total > 0.0) counts /= total;
  return Occupancy{counts};
}

}  // namespace offenv
