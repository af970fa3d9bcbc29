#pragma once

#include <cstdint>

#include "offenv/dataset.hpp"
#include "offenv/features.hpp"
#include "offenv/mdp.hpp"
#include "offenv/weight_model.hpp"

namespace offenv {

enum class PositiveClassKind { tabular_exp, linear_exp };

/// f(x) = exp(theta_x) or exp(theta^T phi(x)), clamped to [c_min, c_max].
struct PositiveFunctionClass {
  PositiveClassKind kind = PositiveClassKind::tabular_exp;
  FeatureMapPtr features;  ///< required for linear_exp
  int n_states = 0;        ///< domain shape, taken from `features` for linear_exp
  int n_actions = 0;
  double c_min = 1e-3;
  double c_max = 1e3;

  static PositiveFunctionClass tabular(int n_states, int n_actions, double c_min = 1e-3, double c_max = 1e3);
  static PositiveFunctionClass linear(FeatureMapPtr features, double c_min = 1e-3, double c_max = 1e3);

  void validate() const;
};

enum class RatioOptimizer {
  newton,    ///< damped projected Newton ascent with backtracking
  gradient,  ///< projected gradient ascent with a fixed step
};

struct RatioFitConfig {
  double reg_lambda = 1e-4;
  double learning_rate = 0.5;  ///< step of the gradient optimizer
  int max_iters = 500;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  RatioOptimizer method = RatioOptimizer::newton;

  void validate() const;
};

struct RatioFit {
  WeightModel model;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;   ///< projected gradient norm at the returned parameters
  double objective = 0.0;   ///< regularized empirical objective at the returned parameters
  int support_holes = 0;    ///< pairs seen in the numerator sample but never in the denominator
  bool flagged = false;     ///< non-convergence or support holes
};

/// sum p ln f - sum q f + 1, using exact tables. Throws DomainError if f <= 0
/// where p > 0.
double population_ratio_objective(const WeightModel& f, const Occupancy& p, const Occupancy& q);

/// Estimates p/q from samples of p (numerator) and q (denominator) by
/// maximizing (1/n) sum ln f(x_i) - (1/m) sum f(y_j) - (lambda/2) |theta|^2.
RatioFit fit_density_ratio(const TransitionDataset& samples_p, const TransitionDataset& samples_q,
                           const PositiveFunctionClass& cls, const RatioFitConfig& cfg);

/// Same fit from per-pair frequency tables (S x A, each summing to 1).
RatioFit fit_density_ratio(const Eigen::MatrixXd& freq_p, const Eigen::MatrixXd& freq_q,
                           const PositiveFunctionClass& cls, const RatioFitConfig& cfg);

/// max over the support of |beta_hat - beta_star|.
double sup_norm_error(const WeightModel& beta_hat, const Eigen::MatrixXd& beta_star, const Mask& support);

}  // namespace offenv
