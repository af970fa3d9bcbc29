#pragma once

#include <string>

#include <json.hpp>

#include "offenv/mdp.hpp"

namespace offenv {

/// {n_states, n_actions, gamma, transition[s][a][s'], reward_mean[s][a],
///  initial_dist[s], r_max, reward_noise_halfwidth}
nlohmann::json mdp_to_json(const TabularMDP& mdp);

/// Parses and validates; throws InvalidModel on the first violation.
TabularMDP mdp_from_json(const nlohmann::json& j);

nlohmann::json policy_to_json(const Policy& pi);
Policy policy_from_json(const nlohmann::json& j);

TabularMDP load_mdp(const std::string& path);
void save_mdp(const TabularMDP& mdp, const std::string& path);

/// Stable FNV-1a digest of the canonical JSON form, as 16 hex digits.
std::string mdp_hash(const TabularMDP& mdp);

}  // namespace offenv
