#pragma once

#include <limits>
#include <memory>
#include <vector>

#include <json.hpp>

#include "offenv/features.hpp"
#include "offenv/kernel.hpp"
#include "offenv/mdp.hpp"

namespace offenv {

enum class ModelKind { tabular, linear, rkhs_coeffs };

/// Output nonlinearity applied before clamping. `exp` keeps density ratios
/// positive.
enum class Link { identity, exp };

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// A real function over state-action pairs: a table, a linear function of a
/// feature map, or a kernel expansion sum_i c_i K(x_i, .). Evaluations are
/// clamped to [lo, hi]. Used for beta, w, q and GradientDICE's tau.
class WeightModel {
 public:
  static WeightModel tabular(const Eigen::MatrixXd& values, double lo = -kUnbounded,
                             double hi = kUnbounded, Link link = Link::identity);
  static WeightModel constant(int n_states, int n_actions, double value);
  static WeightModel linear(FeatureMapPtr features, Eigen::VectorXd params, double lo = -kUnbounded,
                            double hi = kUnbounded, Link link = Link::identity);
  static WeightModel rkhs(KernelPtr kernel, std::vector<int> centers, Eigen::VectorXd coeffs);

  ModelKind kind() const { return kind_; }
  Link link() const { return link_; }
  const Eigen::VectorXd& params() const { return params_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int n_pairs() const { return n_states_ * n_actions_; }
  const FeatureMapPtr& features() const { return features_; }
  const KernelPtr& kernel() const { return kernel_; }
  const std::vector<int>& centers() const { return centers_; }

  /// Clamped value at pair index s*A + a.
  double at(int pair) const;
  double operator()(int s, int a) const { return at(s * n_actions_ + a); }
  /// Value before clamping.
  double unclamped(int pair) const;

  /// Clamped values for all pairs, flattened s*A + a.
  Eigen::VectorXd values() const;
  Eigen::MatrixXd table() const;

  /// Fraction of pairs whose unclamped value lies outside [lo, hi].
  double clamp_fraction() const;

  /// RKHS norm sqrt(c^T K_centers c); only for rkhs_coeffs models.
  double rkhs_norm() const;

  WeightModel with_params(Eigen::VectorXd params) const;
  WeightModel with_bounds(double lo, double hi) const;

 private:
  ModelKind kind_ = ModelKind::tabular;
  Link link_ = Link::identity;
  Eigen::VectorXd params_;
  FeatureMapPtr features_;
  KernelPtr kernel_;
  std::vector<int> centers_;
  double lo_ = -kUnbounded;
  double hi_ = kUnbounded;
  int n_states_ = 0;
  int n_actions_ = 0;
};

std::string to_string(ModelKind kind);

/// {kind, link, params, c_min, c_max, feature_ref, n_states, n_actions}; rkhs
/// models add {centers, bandwidth}. Infinite bounds are written as null.
nlohmann::json model_to_json(const WeightModel& model);

/// Linear models need the feature map named by feature_ref; rkhs models need
/// the kernel.
WeightModel model_from_json(const nlohmann::json& j, FeatureMapPtr features = nullptr,
                            KernelPtr kernel = nullptr);

}  // namespace offenv
