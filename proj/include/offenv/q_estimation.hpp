#pragma once

#include "offenv/dataset.hpp"
#include "offenv/kernel.hpp"
#include "offenv/measure.hpp"
#include "offenv/minimax.hpp"
#include "offenv/weight_estimation.hpp"
#include "offenv/weight_model.hpp"

namespace offenv {

/// |E_mu[w beta (q(s,a) - gamma q(s',pi))] - E_dtr[w r]|. `real` must be
/// real_env data and `sim` simulator_occupancy data.
double loss_Lq(const WeightModel& w, const WeightModel& beta, const WeightModel& q,
               const TransitionMeasure& real, const TransitionMeasure& sim, const Policy& pi,
               double gamma);
double loss_Lq(const WeightModel& w, const WeightModel& beta, const WeightModel& q,
               const TransitionDataset& real, const TransitionDataset& sim, const Policy& pi,
               double gamma);

/// Signed measure g over pairs with L_q(w, beta, q) = |w^T g|.
Eigen::VectorXd loss_Lq_witness(const WeightModel& beta, const WeightModel& q,
                                const TransitionMeasure& real, const TransitionMeasure& sim,
                                const Policy& pi, double gamma);

/// max over the RKHS unit ball of L_q(w, beta, q)^2, i.e. g^T K g.
double rkhs_inner_max_w(const WeightModel& q, const WeightModel& beta, const TransitionMeasure& real,
                        const TransitionMeasure& sim, const Policy& pi, double gamma,
                        const Kernel& kernel);

/// Closed-form q = psi^T zeta against the linear discriminator class w = phi^T alpha:
/// zeta = (E_n[beta phi(s,a) (psi(s,a) - gamma psi(s',pi))^T] + ridge I)^-1 E_dtr[phi r].
/// The returned model clamps to [0, c_q].
LinearSolve linear_q_solve(FeatureMapPtr phi, FeatureMapPtr psi, const WeightModel& beta,
                           const TransitionMeasure& real, const TransitionMeasure& sim,
                           const Policy& pi, double gamma, double ridge_eps = 1e-8,
                           double c_q = kUnbounded);

/// Gradient descent on the q-parameters of rkhs_inner_max_w.
MinimaxFit rkhs_q_fit(const ModelClass& q_class, const WeightModel& beta,
                      const TransitionMeasure& real, const TransitionMeasure& sim, const Policy& pi,
                      double gamma, const Kernel& kernel, const MinimaxFitConfig& cfg);

/// (1-gamma) E_d0[sum_a pi(a|s) q(s,a)].
double ope_from_q(const WeightModel& q, const TransitionMeasure& d0, const Policy& pi, double gamma);
double ope_from_q(const WeightModel& q, const TransitionDataset& d0, const Policy& pi, double gamma);

}  // namespace offenv
