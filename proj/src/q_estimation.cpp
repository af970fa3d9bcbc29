#include "offenv/q_estimation.hpp"

#include <algorithm>
#include <cmath>

#include "offenv/errors.hpp"

namespace offenv {

namespace {

void check_shape(const WeightModel& m, const TransitionMeasure& data, const char* what) {
  if (m.n_states() != data.n_states || m.n_actions() != data.n_actions)
    throw InvalidModel(std::string(what) + " shape does not match the data");
}

double policy_average(const WeightModel& q, const Policy& pi, int s) {
  double v = 0.0;
  for (int a = 0; a < pi.n_actions(); ++a) v += pi.action_probs(s, a) * q(s, a);
  return v;
}

}  // namespace

double loss_Lq(const WeightModel& w, const WeightModel& beta, const WeightModel& q,
               const TransitionMeasure& real, const TransitionMeasure& sim, const Policy& pi,
               double gamma) {
  real.require(DataSource::real_env, "loss_Lq");
  sim.require(DataSource::simulator_occupancy, "loss_Lq");
  check_shape(w, real, "w");
  check_shape(beta, real, "beta");
  check_shape(q, real, "q");
  double td = 0.0;
  for (const auto& it : real.items)
    td += it.weight * w(it.s, it.a) * beta(it.s, it.a) *
          (q(it.s, it.a) - gamma * policy_average(q, pi, it.s_next));
  double reward = 0.0;
  for (const auto& it : sim.items) reward += it.weight * w(it.s, it.a) * it.r;
  return std::abs(td - reward);
}

double loss_Lq(const WeightModel& w, const WeightModel& beta, const WeightModel& q,
               const TransitionDataset& real, const TransitionDataset& sim, const Policy& pi,
               double gamma) {
  const int s = w.n_states();
  const int a = w.n_actions();
  return loss_Lq(w, beta, q, TransitionMeasure::from_dataset(real, s, a),
                 TransitionMeasure::from_dataset(sim, s, a), pi, gamma);
}

Eigen::VectorXd loss_Lq_witness(const WeightModel& beta, const WeightModel& q,
                                const TransitionMeasure& real, const TransitionMeasure& sim,
                                const Policy& pi, double gamma) {
  real.require(DataSource::real_env, "loss_Lq");
  sim.require(DataSource::simulator_occupancy, "loss_Lq");
  check_shape(beta, real, "beta");
  check_shape(q, real, "q");
  const Eigen::SparseMatrix<double> a = flow_terms(real, beta.values(), pi).flow_operator(gamma);
  return a.transpose() * q.values() - reward_mass(sim);
}

double rkhs_inner_max_w(const WeightModel& q, const WeightModel& beta, const TransitionMeasure& real,
                        const TransitionMeasure& sim, const Policy& pi, double gamma,
                        const Kernel& kernel) {
  const Eigen::VectorXd g = loss_Lq_witness(beta, q, real, sim, pi, gamma);
  if (kernel.gram().rows() != g.size()) throw InvalidModel("kernel does not cover every pair");
  const double v = g.dot(kernel.gram() * g);
  if (v < -1e-8) throw NumericalError("rkhs_inner_max_w: Gram quadratic form is negative");
  return std::max(v, 0.0);
}

LinearSolve linear_q_solve(FeatureMapPtr phi, FeatureMapPtr psi, const WeightModel& beta,
                           const TransitionMeasure& real, const TransitionMeasure& sim,
                           const Policy& pi, double gamma, double ridge_eps, double c_q) {
  real.require(DataSource::real_env, "linear_q_solve");
  sim.require(DataSource::simulator_occupancy, "linear_q_solve");
  if (!phi || !psi) throw InvalidModel("linear_q_solve needs both feature maps");
  if (phi->n_pairs() != real.n_pairs() || psi->n_pairs() != real.n_pairs())
    throw InvalidModel("feature maps do not match the data");
  if (ridge_eps < 0.0) throw InvalidModel("ridge_eps must be >= 0");
  check_shape(beta, real, "beta");
  const Eigen::SparseMatrix<double> a = flow_terms(real, beta.values(), pi).flow_operator(gamma);
  const Eigen::SparseMatrix<double> at = a.transpose();
  const Eigen::MatrixXd m = phi->table.transpose() * (at * psi->table);
  const Eigen::VectorXd rhs = phi->table.transpose() * reward_mass(sim);
  LinearSolve out;
  out.params = ridge_solve(m, rhs, ridge_eps, &out.condition);
  out.model = WeightModel::linear(std::move(psi), out.params, 0.0, c_q);
  out.clamp_fraction = out.model.clamp_fraction();
  return out;
}

MinimaxFit rkhs_q_fit(const ModelClass& q_class, const WeightModel& beta,
                      const TransitionMeasure& real, const TransitionMeasure& sim, const Policy& pi,
                      double gamma, const Kernel& kernel, const MinimaxFitConfig& cfg) {
  real.require(DataSource::real_env, "rkhs_q_fit");
  sim.require(DataSource::simulator_occupancy, "rkhs_q_fit");
  check_shape(beta, real, "beta");
  if (q_class.n_pairs() != real.n_pairs()) throw InvalidModel("q class does not match the data");
  const Eigen::SparseMatrix<double> a = flow_terms(real, beta.values(), pi).flow_operator(gamma);
  const Eigen::SparseMatrix<double> at = a.transpose();
  return descend_kernel_loss(q_class, at, reward_mass(sim), kernel.gram(), cfg);
}

double ope_from_q(const WeightModel& q, const TransitionMeasure& d0, const Policy& pi, double gamma) {
  d0.require(DataSource::initial_dist, "ope_from_q");
  check_shape(q, d0, "q");
  double v = 0.0;
  for (const auto& it : d0.items) v += it.weight * policy_average(q, pi, it.s);
  return (1.0 - gamma) * v;
}

double ope_from_q(const WeightModel& q, const TransitionDataset& d0, const Policy& pi, double gamma) {
  return ope_from_q(q, TransitionMeasure::from_dataset(d0, q.n_states(), q.n_actions()), pi, gamma);
}

}  // namespace offenv
