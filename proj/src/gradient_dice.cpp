#include "offenv/gradient_dice.hpp"

#include <algorithm>
#include <cmath>

#include "offenv/errors.hpp"

namespace offenv {

namespace {

struct SaddleTerms {
  Eigen::SparseMatrix<double> next;  // tau^T G f = E_mu[beta tau(s,a) f(s',pi)]
  Eigen::VectorXd mass;              // beta-reweighted real pair mass, stands in for d_tr
  Eigen::VectorXd d_tr;              // simulator pair mass, used by the eta normalization
  Eigen::VectorXd init;              // d0 x pi on pairs
};

SaddleTerms saddle_terms(const WeightModel& beta, const TransitionMeasure& real,
                         const TransitionMeasure& sim, const TransitionMeasure& d0, const Policy& pi) {
  real.require(DataSource::real_env, "beta_gradient_dice");
  sim.require(DataSource::simulator_occupancy, "beta_gradient_dice");
  d0.require(DataSource::initial_dist, "beta_gradient_dice");
  if (beta.n_pairs() != real.n_pairs() || sim.n_pairs() != real.n_pairs() || d0.n_pairs() != real.n_pairs())
    throw InvalidModel("beta_gradient_dice: shapes do not match");
  SaddleTerms t;
  const FlowTerms ft = flow_terms(real, beta.values(), pi);
  t.next = ft.next;
  t.mass = ft.mass;
  t.d_tr = pair_mass(sim);
  t.init = initial_pair_vector(d0, pi);
  return t;
}

double lagrangian(const SaddleTerms& t, const Eigen::VectorXd& tau, const Eigen::VectorXd& f,
                  double eta, double gamma, double lambda) {
  return (1.0 - gamma) * t.init.dot(f) + gamma * tau.dot(t.next * f) -
         tau.dot(t.mass.cwiseProduct(f)) - 0.5 * f.dot(t.mass.cwiseProduct(f)) +
         lambda * (eta * t.d_tr.dot(tau) - eta - 0.5 * eta * eta);
}

}  // namespace

double gradient_dice_lagrangian(const Eigen::VectorXd& tau, const Eigen::VectorXd& f, double eta,
                                const WeightModel& beta, const TransitionMeasure& real,
                                const TransitionMeasure& sim, const TransitionMeasure& d0,
                                const Policy& pi, double gamma, double lambda) {
  const SaddleTerms t = saddle_terms(beta, real, sim, d0, pi);
  if (tau.size() != t.d_tr.size() || f.size() != t.d_tr.size())
    throw InvalidModel("gradient_dice_lagrangian: tau and f need one value per pair");
  return lagrangian(t, tau, f, eta, gamma, lambda);
}

GradientDiceFit beta_gradient_dice_fit(const ModelClass& tau_class, const ModelClass& f_class,
                                       const WeightModel& beta, const TransitionMeasure& real,
                                       const TransitionMeasure& sim, const TransitionMeasure& d0,
                                       const Policy& pi, double gamma, const MinimaxFitConfig& cfg) {
  tau_class.validate();
  f_class.validate();
  cfg.validate();
  const SaddleTerms t = saddle_terms(beta, real, sim, d0, pi);
  if (tau_class.n_pairs() != real.n_pairs() || f_class.n_pairs() != real.n_pairs())
    throw InvalidModel("beta_gradient_dice: classes do not match the data");

  const Eigen::MatrixXd phi_tau = tau_class.design();
  const Eigen::MatrixXd phi_f = f_class.design();
  const Eigen::SparseMatrix<double> next_t = t.next.transpose();
  const double lambda = cfg.gd_lambda;

  // Mass-normalized metric; kappa keeps unvisited pairs finite.
  auto metric = [&](const Eigen::MatrixXd& phi) -> Eigen::MatrixXd {
    if (!cfg.precondition) return Eigen::MatrixXd::Identity(phi.cols(), phi.cols());
    Eigen::MatrixXd m = phi.transpose() * t.mass.asDiagonal() * phi;
    const double kappa = 1e-3 * std::max(m.diagonal().maxCoeff(), 1e-300);
    m.diagonal().array() += kappa;
    return m.inverse();
  };
  const Eigen::MatrixXd pre_tau = metric(phi_tau);
  const Eigen::MatrixXd pre_f = metric(phi_f);

  Eigen::VectorXd theta = cfg.init_params ? *cfg.init_params : tau_class.constant_params(cfg.init_value);
  if (theta.size() != tau_class.n_params()) throw InvalidModel("init_params has the wrong size");
  Eigen::VectorXd omega = Eigen::VectorXd::Zero(f_class.n_params());
  double eta = 0.0;

  GradientDiceFit fit;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    Eigen::VectorXd tau = phi_tau * theta;
    Eigen::VectorXd f = phi_f * omega;

    const Eigen::VectorXd grad_f =
        phi_f.transpose() * ((1.0 - gamma) * t.init + gamma * (next_t * tau) -
                             t.mass.cwiseProduct(tau) - t.mass.cwiseProduct(f));
    const double grad_eta = lambda * (t.d_tr.dot(tau) - 1.0 - eta);
    omega += cfg.learning_rate_inner * (pre_f * grad_f);
    eta += cfg.learning_rate_inner * grad_eta;
    f = phi_f * omega;

    const Eigen::VectorXd grad_tau =
        phi_tau.transpose() * (gamma * (t.next * f) - t.mass.cwiseProduct(f) + lambda * eta * t.d_tr);
    theta -= cfg.learning_rate_w * (pre_tau * grad_tau);

    fit.iterations = it;
    fit.grad_norm = std::max({grad_f.lpNorm<Eigen::Infinity>(), std::abs(grad_eta),
                              grad_tau.lpNorm<Eigen::Infinity>()});
    const double size = std::max({std::abs(eta), theta.lpNorm<Eigen::Infinity>(), omega.lpNorm<Eigen::Infinity>()});
    if (!std::isfinite(size) || size > 1e6)
      throw DivergenceError("beta_gradient_dice: iterates exceeded 1e6 at iteration " + std::to_string(it));
    if (fit.grad_norm <= cfg.objective_tol) {
      fit.converged = true;
      break;
    }
  }
  fit.tau = tau_class.make(theta);
  ModelClass f_free = f_class;
  f_free.lo = -kUnbounded;
  f_free.hi = kUnbounded;
  fit.f = f_free.make(omega);
  fit.eta = eta;
  return fit;
}

}  // namespace offenv
