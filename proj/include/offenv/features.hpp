#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>

namespace offenv {

enum class FeatureKind { one_hot, custom_table };

/// Maps a state-action pair to a row of `table` (indexed s*A + a).
struct FeatureMap {
  FeatureKind kind = FeatureKind::one_hot;
  int dim = 0;
  int n_states = 0;
  int n_actions = 0;
  Eigen::MatrixXd table;
  std::string name;  ///< used as feature_ref in serialized models

  static FeatureMap one_hot(int n_states, int n_actions);
  /// phi(s,a) = e_s: functions of the state alone.
  static FeatureMap state_indicator(int n_states, int n_actions);
  static FeatureMap custom(Eigen::MatrixXd table, int n_states, int n_actions, std::string name);

  int n_pairs() const { return n_states * n_actions; }
  auto row(int pair) const { return table.row(pair); }

  /// Every row has at most one nonzero entry and it equals 1.
  bool is_indicator() const;
  void validate() const;
};

using FeatureMapPtr = std::shared_ptr<const FeatureMap>;

}  // namespace offenv
