#include "offenv/weight_model.hpp"

#include <algorithm>
#include <cmath>

#include "offenv/errors.hpp"

namespace offenv {
namespace {

double apply_link(Link link, double v) { return link == Link::exp ? std::exp(v) : v; }

nlohmann::json bound_to_json(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double bound_from_json(const nlohmann::json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<double>();
}

}  // namespace

WeightModel WeightModel::tabular(const Eigen::MatrixXd& values, double lo, double hi, Link link) {
  WeightModel m;
  m.kind_ = ModelKind::tabular;
  m.link_ = link;
  m.n_states_ = static_cast<int>(values.rows());
  m.n_actions_ = static_cast<int>(values.cols());
  m.params_.resize(values.size());
  for (int s = 0; s < m.n_states_; ++s)
    for (int a = 0; a < m.n_actions_; ++a) m.params_[s * m.n_actions_ + a] = values(s, a);
  m.lo_ = lo;
  m.hi_ = hi;
  return m;
}

WeightModel WeightModel::constant(int n_states, int n_actions, double value) {
  return tabular(Eigen::MatrixXd::Constant(n_states, n_actions, value));
}

WeightModel WeightModel::linear(FeatureMapPtr features, Eigen::VectorXd params, double lo, double hi,
                                Link link) {
  if (!features) throw InvalidModel("linear model needs a feature map");
  if (params.size() != features->dim) throw InvalidModel("linear model params must match feature dim");
  WeightModel m;
  m.kind_ = ModelKind::linear;
  m.link_ = link;
  m.n_states_ = features->n_states;
  m.n_actions_ = features->n_actions;
  m.features_ = std::move(features);
  m.params_ = std::move(params);
  m.lo_ = lo;
  m.hi_ = hi;
  return m;
}

WeightModel WeightModel::rkhs(KernelPtr kernel, std::vector<int> centers, Eigen::VectorXd coeffs) {
  if (!kernel) throw InvalidModel("rkhs model needs a kernel");
  if (static_cast<Eigen::Index>(centers.size()) != coeffs.size())
    throw InvalidModel("rkhs model needs one coefficient per center");
  const int n = kernel->embedding().n_pairs();
  for (int c : centers)
    if (c < 0 || c >= n) throw InvalidModel("rkhs center out of range");
  WeightModel m;
  m.kind_ = ModelKind::rkhs_coeffs;
  m.n_states_ = kernel->embedding().n_states;
  m.n_actions_ = kernel->embedding().n_actions;
  m.kernel_ = std::move(kernel);
  m.centers_ = std::move(centers);
  m.params_ = std::move(coeffs);
  return m;
}

double WeightModel::unclamped(int pair) const {
  double raw = 0.0;
  switch (kind_) {
    case ModelKind::tabular: raw = params_[pair]; break;
    case ModelKind::linear: raw = features_->row(pair).dot(params_); break;
    case ModelKind::rkhs_coeffs:
      for (std::size_t i = 0; i < centers_.size(); ++i) raw += params_[i] * (*kernel_)(centers_[i], pair);
      break;
  }
  return apply_link(link_, raw);
}

double WeightModel::at(int pair) const { return std::clamp(unclamped(pair), lo_, hi_); }

Eigen::VectorXd WeightModel::values() const {
  Eigen::VectorXd v(n_pairs());
  for (int x = 0; x < n_pairs(); ++x) v[x] = at(x);
  return v;
}

Eigen::MatrixXd WeightModel::table() const {
  Eigen::MatrixXd t(n_states_, n_actions_);
  for (int s = 0; s < n_states_; ++s)
    for (int a = 0; a < n_actions_; ++a) t(s, a) = (*this)(s, a);
  return t;
}

double WeightModel::clamp_fraction() const {
  if (n_pairs() == 0) return 0.0;
  int clamped = 0;
  for (int x = 0; x < n_pairs(); ++x) {
    const double v = unclamped(x);
    if (v < lo_ || v > hi_) ++clamped;
  }
  return static_cast<double>(clamped) / n_pairs();
}

double WeightModel::rkhs_norm() const {
  if (kind_ != ModelKind::rkhs_coeffs) throw InvalidModel("rkhs_norm needs an rkhs model");
  double sq = 0.0;
  for (std::size_t i = 0; i < centers_.size(); ++i)
    for (std::size_t j = 0; j < centers_.size(); ++j)
      sq += params_[i] * params_[j] * (*kernel_)(centers_[i], centers_[j]);
  return std::sqrt(std::max(sq, 0.0));
}

WeightModel WeightModel::with_params(Eigen::VectorXd params) const {
  if (params.size() != params_.size()) throw InvalidModel("parameter size mismatch");
  WeightModel m = *this;
  m.params_ = std::move(params);
  return m;
}

WeightModel WeightModel::with_bounds(double lo, double hi) const {
  WeightModel m = *this;
  m.lo_ = lo;
  m.hi_ = hi;
  return m;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::tabular: return "tabular";
    case ModelKind::linear: return "linear";
    case ModelKind::rkhs_coeffs: return "rkhs_coeffs";
  }
  return "unknown";
}

nlohmann::json model_to_json(const WeightModel& model) {
  nlohmann::json j;
  j["kind"] = to_string(model.kind());
  j["link"] = model.link() == Link::exp ? "exp" : "identity";
  j["params"] = std::vector<double>(model.params().data(), model.params().data() + model.params().size());
  j["c_min"] = bound_to_json(model.lo());
  j["c_max"] = bound_to_json(model.hi());
  j["n_states"] = model.n_states();
  j["n_actions"] = model.n_actions();
  j["feature_ref"] = nullptr;
  if (model.kind() == ModelKind::linear) j["feature_ref"] = model.features()->name;
  if (model.kind() == ModelKind::rkhs_coeffs) {
    j["feature_ref"] = model.kernel()->embedding().name;
    j["centers"] = model.centers();
    j["bandwidth"] = model.kernel()->bandwidth();
  }
  return j;
}

WeightModel model_from_json(const nlohmann::json& j, FeatureMapPtr features, KernelPtr kernel) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const Link link = j.value("link", std::string("identity")) == "exp" ? Link::exp : Link::identity;
    const auto raw = j.at("params").get<std::vector<double>>();
    const Eigen::VectorXd params = Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
    const double lo = bound_from_json(j, "c_min", -kUnbounded);
    const double hi = bound_from_json(j, "c_max", kUnbounded);
    if (kind == "tabular") {
      const int s = j.at("n_states").get<int>();
      const int a = j.at("n_actions").get<int>();
      if (params.size() != s * a) throw InvalidModel("tabular params must have n_states*n_actions entries");
      Eigen::MatrixXd t(s, a);
      for (int i = 0; i < s; ++i)
        for (int k = 0; k < a; ++k) t(i, k) = params[i * a + k];
      return WeightModel::tabular(t, lo, hi, link);
    }
    if (kind == "linear") {
      if (!features) throw InvalidModel("linear model requires feature map '" + j.value("feature_ref", std::string()) + "'");
      return WeightModel::linear(std::move(features), params, lo, hi, link);
    }
    if (kind == "rkhs_coeffs") {
      if (!kernel) throw InvalidModel("rkhs model requires its kernel");
      return WeightModel::rkhs(std::move(kernel), j.at("centers").get<std::vector<int>>(), params)
          .with_bounds(lo, hi);
    }
    throw InvalidModel("unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidModel(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace offenv
