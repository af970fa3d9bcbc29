#include "offenv/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "offenv/errors.hpp"

namespace offenv {

ModelClass ModelClass::tabular(int n_states, int n_actions, double lo, double hi) {
  return ModelClass{ModelKind::tabular, nullptr, n_states, n_actions, lo, hi};
}

ModelClass ModelClass::linear(FeatureMapPtr features, double lo, double hi) {
  if (!features) throw InvalidModel("linear class needs a feature map");
  const int s = features->n_states;
  const int a = features->n_actions;
  return ModelClass{ModelKind::linear, std::move(features), s, a, lo, hi};
}

int ModelClass::n_params() const { return kind == ModelKind::linear ? features->dim : n_pairs(); }

Eigen::MatrixXd ModelClass::design() const {
  if (kind == ModelKind::linear) return features->table;
  return Eigen::MatrixXd::Identity(n_pairs(), n_pairs());
}

WeightModel ModelClass::make(const Eigen::VectorXd& params) const {
  if (kind == ModelKind::linear) return WeightModel::linear(features, params, lo, hi);
  Eigen::MatrixXd t(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) t(s, a) = params[s * n_actions + a];
  return WeightModel::tabular(t, lo, hi);
}

Eigen::VectorXd ModelClass::constant_params(double value) const {
  if (kind != ModelKind::linear) return Eigen::VectorXd::Constant(n_pairs(), value);
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(n_pairs(), value);
  return features->table.completeOrthogonalDecomposition().solve(target);
}

void ModelClass::validate() const {
  if (kind == ModelKind::rkhs_coeffs) throw InvalidModel("model class must be tabular or linear");
  if (kind == ModelKind::linear) {
    if (!features) throw InvalidModel("linear class needs a feature map");
    features->validate();
  }
  if (n_states <= 0 || n_actions <= 0) throw InvalidModel("model class needs a positive shape");
  if (!(lo <= hi)) throw InvalidModel("model class needs lo <= hi");
}

void MinimaxFitConfig::validate() const {
  if (max_iters < 1) throw InvalidModel("max_iters must be >= 1");
  if (!(ridge_eps >= 0.0)) throw InvalidModel("ridge_eps must be >= 0");
  if (!(step_scale > 0.0 && learning_rate_w > 0.0 && learning_rate_inner > 0.0))
    throw InvalidModel("step sizes must be positive");
  if (!(gd_lambda >= 0.0)) throw InvalidModel("gd_lambda must be >= 0");
}

MinimaxFit descend_kernel_loss(const ModelClass& cls, const Eigen::SparseMatrix<double>& b_op,
                               const Eigen::VectorXd& offset, const Eigen::MatrixXd& gram,
                               const MinimaxFitConfig& cfg) {
  cls.validate();
  cfg.validate();
  const Eigen::MatrixXd phi = cls.design();
  const Eigen::Index n = phi.rows();
  if (b_op.rows() != n || b_op.cols() != n || offset.size() != n || gram.rows() != n)
    throw InvalidModel("kernel loss operands do not match the model class");

  Eigen::VectorXd theta = cfg.init_params ? *cfg.init_params : cls.constant_params(cfg.init_value);
  if (theta.size() != cls.n_params()) throw InvalidModel("init_params has the wrong size");
  const bool project = cls.kind == ModelKind::tabular;
  if (project) theta = theta.cwiseMax(cls.lo).cwiseMin(cls.hi);

  auto values = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
    return (phi * th).cwiseMax(cls.lo).cwiseMin(cls.hi);
  };
  auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd* residual) {
    Eigen::VectorXd c = b_op * v - offset;
    const double j = std::max(0.0, c.dot(gram * c));
    if (residual) *residual = std::move(c);
    return j;
  };

  // Lipschitz constant of the gradient for the unclamped quadratic.
  const Eigen::MatrixXd bphi = b_op * phi;
  const Eigen::MatrixXd hess = 2.0 * bphi.transpose() * gram * bphi;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess, Eigen::EigenvaluesOnly);
  const double lipschitz = eig.eigenvalues().maxCoeff();

  MinimaxFit fit;
  Eigen::VectorXd residual;
  Eigen::VectorXd v = values(theta);
  double j = objective(v, &residual);
  fit.trace.push_back(j);
  Eigen::VectorXd best = theta;
  double best_j = j;

  if (j <= cfg.objective_tol || !(lipschitz > 0.0)) {
    fit.converged = true;
  } else {
    const double step = cfg.step_scale / lipschitz;
    for (int it = 1; it <= cfg.max_iters; ++it) {
      Eigen::VectorXd grad_v = 2.0 * (b_op.transpose() * (gram * residual));
      for (Eigen::Index x = 0; x < n; ++x) {
        const double raw = phi.row(x).dot(theta);
        // Outside the box only a step back toward it counts.
        if ((raw < cls.lo && grad_v[x] > 0.0) || (raw > cls.hi && grad_v[x] < 0.0)) grad_v[x] = 0.0;
      }
      const Eigen::VectorXd grad = phi.transpose() * grad_v;
      theta -= step * grad;
      if (project) theta = theta.cwiseMax(cls.lo).cwiseMin(cls.hi);
      v = values(theta);
      const double prev = j;
      j = objective(v, &residual);
      fit.trace.push_back(j);
      fit.iterations = it;
      if (j < best_j) {
        best_j = j;
        best = theta;
        fit.best_iter = it;
      }
      if (j <= cfg.objective_tol || std::abs(prev - j) <= 1e-13 * std::max(prev, 1e-300) ||
          grad.norm() == 0.0) {
        fit.converged = true;
        break;
      }
    }
  }
  fit.model = cls.make(best);
  fit.objective = best_j;
  return fit;
}

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs, double ridge,
                            double* condition) {
  if (m.rows() != m.cols()) throw InvalidModel("closed-form solve needs square feature maps");
  const Eigen::MatrixXd reg = m + ridge * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(reg, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (condition) *condition = cond;
  if (!(cond <= 1e12))
    throw SingularSystem("closed-form solve: condition number " + std::to_string(cond) + " exceeds 1e12");
  return svd.solve(rhs);
}

}  // namespace offenv
