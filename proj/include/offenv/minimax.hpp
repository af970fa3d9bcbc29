#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "offenv/features.hpp"
#include "offenv/weight_model.hpp"

namespace offenv {

/// Parameterized function class for w, q, tau or f: a table over pairs or a
/// linear function of a feature map, clamped to [lo, hi].
struct ModelClass {
  ModelKind kind = ModelKind::tabular;
  FeatureMapPtr features;  ///< required for linear
  int n_states = 0;
  int n_actions = 0;
  double lo = 0.0;
  double hi = kUnbounded;

  static ModelClass tabular(int n_states, int n_actions, double lo = 0.0, double hi = kUnbounded);
  static ModelClass linear(FeatureMapPtr features, double lo = 0.0, double hi = kUnbounded);

  int n_pairs() const { return n_states * n_actions; }
  int n_params() const;
  /// (S*A) x n_params design matrix; the identity for tabular classes.
  Eigen::MatrixXd design() const;
  WeightModel make(const Eigen::VectorXd& params) const;
  /// Parameters whose unclamped output is as close as possible (least squares)
  /// to the constant `value`.
  Eigen::VectorXd constant_params(double value) const;
  void validate() const;
};

struct MinimaxFitConfig {
  double learning_rate_w = 1e-2;      ///< GradientDICE step for tau
  double learning_rate_inner = 1e-1;  ///< GradientDICE step for f and eta
  double step_scale = 1.0;            ///< kernel-loss descent step, in units of 1/Lipschitz
  int max_iters = 5000;
  double ridge_eps = 1e-8;
  double gd_lambda = 1.0;
  /// GradientDICE: premultiply the tau and f gradients by (Phi^T D_tr Phi + kappa I)^-1,
  /// i.e. per-pair steps scaled by 1/d_tr for tabular classes.
  bool precondition = true;
  std::uint64_t seed = 0;
  double objective_tol = 1e-8;  ///< kernel-loss descent stops once the objective is this small
  double init_value = 1.0;      ///< constant the descent starts from
  std::optional<Eigen::VectorXd> init_params;

  void validate() const;
};

struct MinimaxFit {
  WeightModel model;          ///< best iterate
  std::vector<double> trace;  ///< objective at every iterate, starting with the initial point
  int best_iter = 0;          ///< earliest iterate attaining the minimum
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected gradient descent on J(v) = (B v - b)^T K (B v - b) where
/// v = clamp(design * theta) are the model's values on all pairs. Returns the
/// best iterate. Shared by the weight and q estimators, whose closed-form
/// kernel losses both take this shape.
MinimaxFit descend_kernel_loss(const ModelClass& cls, const Eigen::SparseMatrix<double>& b_op,
                               const Eigen::VectorXd& offset, const Eigen::MatrixXd& gram,
                               const MinimaxFitConfig& cfg);

/// Solves (m + ridge I) x = rhs. Throws SingularSystem when the ridged matrix
/// has 2-norm condition number above 1e12 (or m is not square).
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs, double ridge,
                            double* condition = nullptr);

}  // namespace offenv
