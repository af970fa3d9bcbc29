#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "offenv/mdp.hpp"

namespace offenv {

enum class DataSource { real_env, simulator_occupancy, initial_dist };

std::string to_string(DataSource source);
DataSource data_source_from_string(const std::string& name);

/// Action and reward stored for initial-state samples, which carry only s.
inline constexpr int kNoAction = -1;
inline constexpr int kNoState = -1;

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;

  bool operator==(const Transition&) const = default;
};

struct TransitionDataset {
  std::vector<Transition> tuples;
  std::uint64_t seed = 0;
  DataSource source = DataSource::real_env;

  std::size_t size() const { return tuples.size(); }
  bool empty() const { return tuples.empty(); }

  /// Checks index bounds and reward range against the generating MDP.
  void validate(const TabularMDP& mdp) const;
};

/// n i.i.d. tuples with (s,a) ~ mu, r ~ R(s,a), s' ~ P_te(.|s,a).
TransitionDataset sample_offline_dataset(const TabularMDP& mdp_te, const Occupancy& mu,
                                         std::size_t n, std::uint64_t seed);

/// n i.i.d. tuples with (s,a) ~ d^pi in the simulator, rewards from the shared
/// reward model and s' ~ P_tr(.|s,a).
TransitionDataset sample_simulator_occupancy(const TabularMDP& mdp_tr, const Policy& pi,
                                             std::size_t n, std::uint64_t seed);
TransitionDataset sample_simulator_occupancy(const TabularMDP& mdp_tr, const Occupancy& d_tr,
                                             std::size_t n, std::uint64_t seed);

/// n i.i.d. s ~ d0 with sentinel action, reward and next state.
TransitionDataset sample_initial_states(const TabularMDP& mdp, std::size_t n, std::uint64_t seed);

/// Empirical (s,a) frequencies as an S x A table (zero for empty datasets).
Eigen::MatrixXd empirical_pair_frequencies(const TransitionDataset& data, int n_states,
                                           int n_actions);

/// Noise kernel used by the gridworld builder, recorded in sidecars.
inline constexpr const char* kNoiseKernel = "uniform_over_four_moves";

/// CSV with header s,a,r,s_next plus a JSON sidecar at `<csv>.json` holding
/// {seed, source, n, mdp_hash, noise_kernel}.
void write_dataset(const TransitionDataset& data, const TabularMDP& mdp, const std::string& csv_path);
TransitionDataset read_dataset(const std::string& csv_path);
nlohmann::json dataset_sidecar(const TransitionDataset& data, const TabularMDP& mdp);

}  // namespace offenv
