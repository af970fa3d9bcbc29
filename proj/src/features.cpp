#include "offenv/features.hpp"

#include "offenv/errors.hpp"

namespace offenv {

FeatureMap FeatureMap::one_hot(int n_states, int n_actions) {
  const int n = n_states * n_actions;
  return FeatureMap{FeatureKind::one_hot, n, n_states, n_actions, Eigen::MatrixXd::Identity(n, n), "one_hot"};
}

FeatureMap FeatureMap::state_indicator(int n_states, int n_actions) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n_states * n_actions, n_states);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) t(s * n_actions + a, s) = 1.0;
  return FeatureMap{FeatureKind::custom_table, n_states, n_states, n_actions, std::move(t), "state_indicator"};
}

FeatureMap FeatureMap::custom(Eigen::MatrixXd table, int n_states, int n_actions, std::string name) {
  FeatureMap f{FeatureKind::custom_table, static_cast<int>(table.cols()), n_states, n_actions,
               std::move(table), std::move(name)};
  f.validate();
  return f;
}

bool FeatureMap::is_indicator() const {
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    int nonzero = 0;
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      const double v = table(i, j);
      if (v == 0.0) continue;
      if (v != 1.0 || ++nonzero > 1) return false;
    }
  }
  return true;
}

void FeatureMap::validate() const {
  if (n_states <= 0 || n_actions <= 0) throw InvalidModel("feature map needs a positive shape");
  if (table.rows() != n_pairs() || table.cols() != dim)
    throw InvalidModel("feature table must be (S*A) x dim");
  if (!table.allFinite()) throw InvalidModel("feature table has non-finite entries");
  if (kind == FeatureKind::one_hot && (dim != n_pairs() || !is_indicator() ||
                                       (table.rowwise().sum().array() != 1.0).any()))
    throw InvalidModel("one_hot features must be the S*A identity");
}

}  // namespace offenv
