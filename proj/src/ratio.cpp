#include "offenv/ratio.hpp"

#include <algorithm>
#include <cmath>

#include "offenv/errors.hpp"

namespace offenv {
namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Eigen::Index s = 0; s < m.rows(); ++s)
    for (Eigen::Index a = 0; a < m.cols(); ++a) v[s * m.cols() + a] = m(s, a);
  return v;
}

struct Problem {
  Eigen::MatrixXd phi;  // (S*A) x d
  Eigen::VectorXd p;
  Eigen::VectorXd q;
  double lambda;
  double lo;
  double hi;

  double objective(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = phi * theta;
    return p.dot(z) - q.dot(z.array().exp().matrix()) - 0.5 * lambda * theta.squaredNorm();
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd e = (phi * theta).array().exp();
    return phi.transpose() * (p - q.cwiseProduct(e)) - lambda * theta;
  }
  Eigen::VectorXd clip(Eigen::VectorXd theta) const { return theta.cwiseMax(lo).cwiseMin(hi); }
  Eigen::Array<bool, Eigen::Dynamic, 1> active(const Eigen::VectorXd& theta, const Eigen::VectorXd& g) const {
    Eigen::Array<bool, Eigen::Dynamic, 1> act(theta.size());
    for (Eigen::Index k = 0; k < theta.size(); ++k)
      act[k] = (theta[k] <= lo && g[k] < 0.0) || (theta[k] >= hi && g[k] > 0.0);
    return act;
  }
};

Eigen::VectorXd newton_direction(const Problem& pb, const Eigen::VectorXd& theta, const Eigen::VectorXd& g,
                                 const Eigen::Array<bool, Eigen::Dynamic, 1>& act) {
  const Eigen::VectorXd e = (pb.phi * theta).array().exp();
  Eigen::MatrixXd h = pb.phi.transpose() * pb.q.cwiseProduct(e).asDiagonal() * pb.phi;
  h.diagonal().array() += pb.lambda;
  std::vector<Eigen::Index> free;
  for (Eigen::Index k = 0; k < theta.size(); ++k)
    if (!act[k]) free.push_back(k);
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(theta.size());
  if (free.empty()) return dir;
  const auto nf = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd hf(nf, nf);
  Eigen::VectorXd gf(nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    gf[i] = g[free[i]];
    for (Eigen::Index j = 0; j < nf; ++j) hf(i, j) = h(free[i], free[j]);
  }
  // Levenberg damping keeps the step finite on pairs the denominator never saw.
  const double damping = 1e-12 * (1.0 + hf.diagonal().cwiseAbs().maxCoeff());
  hf.diagonal().array() += damping;
  const Eigen::VectorXd df = hf.ldlt().solve(gf);
  for (Eigen::Index i = 0; i < nf; ++i) dir[free[i]] = df[i];
  return dir;
}

}  // namespace

PositiveFunctionClass PositiveFunctionClass::tabular(int n_states, int n_actions, double c_min, double c_max) {
  return PositiveFunctionClass{PositiveClassKind::tabular_exp, nullptr, n_states, n_actions, c_min, c_max};
}

PositiveFunctionClass PositiveFunctionClass::linear(FeatureMapPtr features, double c_min, double c_max) {
  if (!features) throw InvalidModel("linear_exp class needs a feature map");
  const int s = features->n_states;
  const int a = features->n_actions;
  return PositiveFunctionClass{PositiveClassKind::linear_exp, std::move(features), s, a, c_min, c_max};
}

void PositiveFunctionClass::validate() const {
  if (!(c_min > 0.0 && c_min <= c_max)) throw InvalidModel("need 0 < c_min <= c_max");
  if (kind == PositiveClassKind::linear_exp) {
    if (!features) throw InvalidModel("linear_exp class needs a feature map");
    features->validate();
    if (features->n_states != n_states || features->n_actions != n_actions)
      throw InvalidModel("class shape disagrees with its feature map");
  }
  if (n_states <= 0 || n_actions <= 0) throw InvalidModel("function class needs a positive shape");
}

void RatioFitConfig::validate() const {
  if (max_iters < 1) throw InvalidModel("max_iters must be >= 1");
  if (!(tol > 0.0)) throw InvalidModel("tol must be positive");
  if (!(reg_lambda >= 0.0)) throw InvalidModel("reg_lambda must be >= 0");
  if (method == RatioOptimizer::gradient && !(learning_rate > 0.0))
    throw InvalidModel("learning_rate must be positive");
}

double population_ratio_objective(const WeightModel& f, const Occupancy& p, const Occupancy& q) {
  double obj = 1.0;
  for (Eigen::Index s = 0; s < p.dist.rows(); ++s)
    for (Eigen::Index a = 0; a < p.dist.cols(); ++a) {
      const double fv = f(static_cast<int>(s), static_cast<int>(a));
      if (p.dist(s, a) > 0.0) {
        if (!(fv > 0.0))
          throw DomainError("ratio model is not positive at (" + std::to_string(s) + "," +
                            std::to_string(a) + ")");
        obj += p.dist(s, a) * std::log(fv);
      }
      obj -= q.dist(s, a) * fv;
    }
  return obj;
}

RatioFit fit_density_ratio(const Eigen::MatrixXd& freq_p, const Eigen::MatrixXd& freq_q,
                           const PositiveFunctionClass& cls, const RatioFitConfig& cfg) {
  cls.validate();
  cfg.validate();
  if (freq_p.rows() != freq_q.rows() || freq_p.cols() != freq_q.cols())
    throw InvalidModel("frequency tables must share a shape");
  if (freq_p.rows() != cls.n_states || freq_p.cols() != cls.n_actions)
    throw InvalidModel("frequency tables do not match the function class shape");
  const int n_states = static_cast<int>(freq_p.rows());
  const int n_actions = static_cast<int>(freq_p.cols());

  Problem pb;
  pb.p = flatten(freq_p);
  pb.q = flatten(freq_q);
  pb.lambda = cfg.reg_lambda;
  pb.lo = std::log(cls.c_min);
  pb.hi = std::log(cls.c_max);
  if (cls.kind == PositiveClassKind::tabular_exp) {
    pb.phi = Eigen::MatrixXd::Identity(pb.p.size(), pb.p.size());
  } else {
    pb.phi = cls.features->table;
    if (!cls.features->is_indicator()) {
      const double bound = std::max(std::abs(pb.lo), std::abs(pb.hi));
      pb.lo = -bound;
      pb.hi = bound;
    }
  }

  RatioFit fit;
  for (Eigen::Index x = 0; x < pb.p.size(); ++x)
    if (pb.p[x] > 0.0 && pb.q[x] == 0.0) ++fit.support_holes;

  Eigen::VectorXd theta = pb.clip(Eigen::VectorXd::Zero(pb.phi.cols()));
  double value = pb.objective(theta);
  Eigen::VectorXd g = pb.gradient(theta);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const auto act = pb.active(theta, g);
    const Eigen::VectorXd pg = act.select(Eigen::VectorXd::Zero(g.size()), g);
    fit.grad_norm = pg.size() ? pg.cwiseAbs().maxCoeff() : 0.0;
    fit.iterations = it;
    if (fit.grad_norm < cfg.tol) {
      fit.converged = true;
      break;
    }
    if (cfg.method == RatioOptimizer::gradient) {
      theta = pb.clip(theta + cfg.learning_rate * pg);
      value = pb.objective(theta);
    } else {
      const Eigen::VectorXd dir = newton_direction(pb, theta, pg, act);
      double t = 1.0;
      bool accepted = false;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        const Eigen::VectorXd cand = pb.clip(theta + t * dir);
        const double cv = pb.objective(cand);
        if (std::isfinite(cv) && cv >= value + 1e-4 * pg.dot(cand - theta)) {
          theta = cand;
          value = cv;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;  // no ascent possible at machine precision
    }
    g = pb.gradient(theta);
    fit.iterations = it + 1;
  }
  {
    const auto act = pb.active(theta, g);
    const Eigen::VectorXd pg = act.select(Eigen::VectorXd::Zero(g.size()), g);
    fit.grad_norm = pg.size() ? pg.cwiseAbs().maxCoeff() : 0.0;
    fit.converged = fit.grad_norm < cfg.tol;
  }
  fit.objective = value;
  fit.flagged = !fit.converged || fit.support_holes > 0;

  if (cls.kind == PositiveClassKind::tabular_exp) {
    Eigen::MatrixXd t(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a) t(s, a) = theta[s * n_actions + a];
    fit.model = WeightModel::tabular(t, cls.c_min, cls.c_max, Link::exp);
  } else {
    fit.model = WeightModel::linear(cls.features, theta, cls.c_min, cls.c_max, Link::exp);
  }
  return fit;
}

RatioFit fit_density_ratio(const TransitionDataset& samples_p, const TransitionDataset& samples_q,
                           const PositiveFunctionClass& cls, const RatioFitConfig& cfg) {
  if (samples_p.empty() || samples_q.empty()) throw InvalidModel("density ratio fit needs nonempty samples");
  if (samples_p.source == DataSource::initial_dist || samples_q.source == DataSource::initial_dist)
    throw SourceMismatch("density ratio fit needs state-action samples");
  cls.validate();
  for (const auto* d : {&samples_p, &samples_q})
    for (const Transition& t : d->tuples)
      if (t.s < 0 || t.s >= cls.n_states || t.a < 0 || t.a >= cls.n_actions)
        throw InvalidModel("sample outside the function class domain");
  return fit_density_ratio(empirical_pair_frequencies(samples_p, cls.n_states, cls.n_actions),
                           empirical_pair_frequencies(samples_q, cls.n_states, cls.n_actions), cls, cfg);
}

double sup_norm_error(const WeightModel& beta_hat, const Eigen::MatrixXd& beta_star, const Mask& support) {
  if (beta_star.rows() != beta_hat.n_states() || beta_star.cols() != beta_hat.n_actions() ||
      support.rows() != beta_star.rows() || support.cols() != beta_star.cols())
    throw InvalidModel("sup_norm_error: shapes disagree");
  double err = 0.0;
  for (Eigen::Index s = 0; s < beta_star.rows(); ++s)
    for (Eigen::Index a = 0; a < beta_star.cols(); ++a)
      if (support(s, a))
        err = std::max(err, std::abs(beta_hat(static_cast<int>(s), static_cast<int>(a)) - beta_star(s, a)));
  return err;
}

}  // namespace offenv
