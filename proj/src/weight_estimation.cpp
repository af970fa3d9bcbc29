#include "offenv/weight_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "offenv/errors.hpp"

namespace offenv {

namespace {

void check_shape(const WeightModel& m, const TransitionMeasure& real, const char* what) {
  if (m.n_states() != real.n_states || m.n_actions() != real.n_actions)
    throw InvalidModel(std::string(what) + " shape does not match the data");
}

double policy_average(const WeightModel& q, const Policy& pi, int s) {
  double v = 0.0;
  for (int a = 0; a < pi.n_actions(); ++a) v += pi.action_probs(s, a) * q(s, a);
  return v;
}

}  // namespace

double loss_Lw(const WeightModel& w, const WeightModel& beta, const WeightModel& q,
               const TransitionMeasure& real, const TransitionMeasure& d0, const Policy& pi,
               double gamma) {
  real.require(DataSource::real_env, "loss_Lw");
  d0.require(DataSource::initial_dist, "loss_Lw");
  check_shape(w, real, "w");
  check_shape(beta, real, "beta");
  check_shape(q, real, "q");
  double flow = 0.0;
  for (const auto& it : real.items)
    flow += it.weight * w(it.s, it.a) * beta(it.s, it.a) *
            (q(it.s, it.a) - gamma * policy_average(q, pi, it.s_next));
  double init = 0.0;
  for (const auto& it : d0.items) init += it.weight * policy_average(q, pi, it.s);
  return std::abs(flow - (1.0 - gamma) * init);
}

double loss_Lw(const WeightModel& w, const WeightModel& beta, const WeightModel& q,
               const TransitionDataset& real, const TransitionDataset& d0, const Policy& pi,
               double gamma) {
  const int s = w.n_states();
  const int a = w.n_actions();
  return loss_Lw(w, beta, q, TransitionMeasure::from_dataset(real, s, a),
                 TransitionMeasure::from_dataset(d0, s, a), pi, gamma);
}

Eigen::VectorXd loss_Lw_witness(const WeightModel& w, const WeightModel& beta,
                                const TransitionMeasure& real, const TransitionMeasure& d0,
                                const Policy& pi, double gamma) {
  real.require(DataSource::real_env, "loss_Lw");
  d0.require(DataSource::initial_dist, "loss_Lw");
  check_shape(w, real, "w");
  check_shape(beta, real, "beta");
  const FlowTerms terms = flow_terms(real, beta.values(), pi);
  return terms.flow_operator(gamma) * w.values() - (1.0 - gamma) * initial_pair_vector(d0, pi);
}

double rkhs_inner_max(const WeightModel& w, const WeightModel& beta, const TransitionMeasure& real,
                      const TransitionMeasure& d0, const Policy& pi, double gamma,
                      const Kernel& kernel) {
  const Eigen::VectorXd c = loss_Lw_witness(w, beta, real, d0, pi, gamma);
  if (kernel.gram().rows() != c.size()) throw InvalidModel("kernel does not cover every pair");
  const double v = c.dot(kernel.gram() * c);
  if (v < -1e-8) throw NumericalError("rkhs_inner_max: Gram quadratic form is negative");
  return std::max(v, 0.0);
}

LinearSolve linear_weight_solve(FeatureMapPtr phi, FeatureMapPtr psi, const WeightModel& beta,
                                const TransitionMeasure& real, const TransitionMeasure& d0,
                                const Policy& pi, double gamma, double ridge_eps, double c_w) {
  real.require(DataSource::real_env, "linear_weight_solve");
  d0.require(DataSource::initial_dist, "linear_weight_solve");
  if (!phi || !psi) throw InvalidModel("linear_weight_solve needs both feature maps");
  if (phi->n_pairs() != real.n_pairs() || psi->n_pairs() != real.n_pairs())
    throw InvalidModel("feature maps do not match the data");
  if (ridge_eps < 0.0) throw InvalidModel("ridge_eps must be >= 0");
  check_shape(beta, real, "beta");
  const Eigen::SparseMatrix<double> a = flow_terms(real, beta.values(), pi).flow_operator(gamma);
  const Eigen::MatrixXd m = psi->table.transpose() * (a * phi->table);
  const Eigen::VectorXd rhs = (1.0 - gamma) * (psi->table.transpose() * initial_pair_vector(d0, pi));
  LinearSolve out;
  out.params = ridge_solve(m, rhs, ridge_eps, &out.condition);
  out.model = WeightModel::linear(std::move(phi), out.params, 0.0, c_w);
  out.clamp_fraction = out.model.clamp_fraction();
  return out;
}

MinimaxFit rkhs_weight_fit(const ModelClass& w_class, const WeightModel& beta,
                           const TransitionMeasure& real, const TransitionMeasure& d0,
                           const Policy& pi, double gamma, const Kernel& kernel,
                           const MinimaxFitConfig& cfg) {
  real.require(DataSource::real_env, "rkhs_weight_fit");
  d0.require(DataSource::initial_dist, "rkhs_weight_fit");
  check_shape(beta, real, "beta");
  if (w_class.n_pairs() != real.n_pairs()) throw InvalidModel("w class does not match the data");
  const Eigen::SparseMatrix<double> a = flow_terms(real, beta.values(), pi).flow_operator(gamma);
  const Eigen::VectorXd b = (1.0 - gamma) * initial_pair_vector(d0, pi);
  return descend_kernel_loss(w_class, a, b, kernel.gram(), cfg);
}

double ope_estimate(const WeightModel& w_hat, const TransitionMeasure& sim, bool normalize) {
  sim.require(DataSource::simulator_occupancy, "ope_estimate");
  check_shape(w_hat, sim, "w");
  double num = 0.0;
  double den = 0.0;
  for (const auto& it : sim.items) {
    const double w = w_hat(it.s, it.a);
    num += it.weight * w * it.r;
    den += it.weight * w;
  }
  if (!normalize) return num;
  if (!(den > 0.0)) throw DomainError("ope_estimate: weights vanish on the simulator data");
  return num / den;
}

double ope_estimate(const WeightModel& w_hat, const TransitionDataset& sim, bool normalize) {
  return ope_estimate(w_hat, TransitionMeasure::from_dataset(sim, w_hat.n_states(), w_hat.n_actions()),
                      normalize);
}

double ope_estimate_real_rewards(const WeightModel& w_hat, const WeightModel& beta,
                                 const TransitionMeasure& real) {
  real.require(DataSource::real_env, "ope_estimate_real_rewards");
  check_shape(w_hat, real, "w");
  check_shape(beta, real, "beta");
  double v = 0.0;
  for (const auto& it : real.items) v += it.weight * w_hat(it.s, it.a) * beta(it.s, it.a) * it.r;
  return v;
}

nlohmann::json report_to_json(const EstimationReport& report) {
  nlohmann::json j{{"estimator", report.estimator},
                   {"n", report.n},
                   {"seed", report.seed},
                   {"j_hat", report.j_hat}};
  j["j_te_exact"] = report.j_te_exact ? nlohmann::json(*report.j_te_exact) : nlohmann::json(nullptr);
  j["loss_trace_path"] =
      report.loss_trace_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(report.loss_trace_path);
  return j;
}

void write_trace_csv(const std::vector<double>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(17);
  out << "iter,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

}  // namespace offenv
