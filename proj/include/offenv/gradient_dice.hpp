#pragma once

#include "offenv/measure.hpp"
#include "offenv/minimax.hpp"
#include "offenv/weight_model.hpp"

namespace offenv {

/// beta-GradientDICE saddle point
///   L(tau, eta, f) = (1-gamma) E_d0[f(s,pi)] + gamma E_mu[beta tau(s,a) f(s',pi)]
///                    - E_dtr[tau f] - 1/2 E_dtr[f^2] + lambda (E_dtr[eta tau - eta] - eta^2/2),
/// minimized over tau and maximized over f and eta. The E_dtr[tau f] and
/// E_dtr[f^2] terms are read off the real measure reweighted by beta, like the
/// next-state term; the eta normalization uses the simulator measure.
/// Population measures give exact gradients and empirical ones give
/// full-batch sample gradients.
struct GradientDiceFit {
  WeightModel tau;  ///< clamped to the tau class bounds
  WeightModel f;
  double eta = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;  ///< max-norm of all three gradients at the last iterate
};

/// Value of the saddle objective (tau and f evaluated without clamping).
double gradient_dice_lagrangian(const Eigen::VectorXd& tau, const Eigen::VectorXd& f, double eta,
                                const WeightModel& beta, const TransitionMeasure& real,
                                const TransitionMeasure& sim, const TransitionMeasure& d0,
                                const Policy& pi, double gamma, double lambda);

/// Alternating updates: ascent on f and eta, then descent on tau with the new
/// f and eta. Steps are cfg.learning_rate_inner (f, eta) and
/// cfg.learning_rate_w (tau); the loop stops once every gradient is below
/// cfg.objective_tol in max norm. Throws DivergenceError if |eta| or any
/// parameter exceeds 1e6.
GradientDiceFit beta_gradient_dice_fit(const ModelClass& tau_class, const ModelClass& f_class,
                                       const WeightModel& beta, const TransitionMeasure& real,
                                       const TransitionMeasure& sim, const TransitionMeasure& d0,
                                       const Policy& pi, double gamma, const MinimaxFitConfig& cfg);

}  // namespace offenv
