#include "offenv/mdp_io.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "offenv/errors.hpp"

namespace offenv {
namespace {

using nlohmann::json;

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw InvalidModel(std::string("missing field '") + name + "'");
  return *it;
}

Eigen::MatrixXd matrix_from(const json& j, const char* name, int rows, int cols) {
  const json& m = field(j, name);
  if (!m.is_array() || static_cast<int>(m.size()) != rows)
    throw InvalidModel(std::string(name) + " must have " + std::to_string(rows) + " rows");
  Eigen::MatrixXd out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!m[r].is_array() || static_cast<int>(m[r].size()) != cols)
      throw InvalidModel(std::string(name) + "[" + std::to_string(r) + "] must have " +
                         std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c) out(r, c) = m[r][c].get<double>();
  }
  return out;
}

json matrix_to(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

json mdp_to_json(const TabularMDP& mdp) {
  json j;
  j["n_states"] = mdp.n_states;
  j["n_actions"] = mdp.n_actions;
  j["gamma"] = mdp.gamma;
  j["r_max"] = mdp.r_max;
  j["reward_noise_halfwidth"] = mdp.reward_noise_halfwidth;
  json trans = json::array();
  for (int s = 0; s < mdp.n_states; ++s) {
    json per_action = json::array();
    for (int a = 0; a < mdp.n_actions; ++a) {
      json row = json::array();
      for (int s2 = 0; s2 < mdp.n_states; ++s2) row.push_back(mdp.transition(mdp.index(s, a), s2));
      per_action.push_back(std::move(row));
    }
    trans.push_back(std::move(per_action));
  }
  j["transition"] = std::move(trans);
  j["reward_mean"] = matrix_to(mdp.reward_mean);
  j["initial_dist"] = std::vector<double>(mdp.initial_dist.data(),
                                          mdp.initial_dist.data() + mdp.initial_dist.size());
  return j;
}

TabularMDP mdp_from_json(const json& j) {
  try {
    TabularMDP mdp;
    mdp.n_states = field(j, "n_states").get<int>();
    mdp.n_actions = field(j, "n_actions").get<int>();
    if (mdp.n_states <= 0 || mdp.n_actions <= 0)
      throw InvalidModel("n_states and n_actions must be positive");
    mdp.gamma = field(j, "gamma").get<double>();
    mdp.r_max = field(j, "r_max").get<double>();
    mdp.reward_noise_halfwidth = j.value("reward_noise_halfwidth", 0.0);

    const json& trans = field(j, "transition");
    if (!trans.is_array() || static_cast<int>(trans.size()) != mdp.n_states)
      throw InvalidModel("transition must have n_states entries");
    mdp.transition.resize(mdp.n_pairs(), mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
      if (!trans[s].is_array() || static_cast<int>(trans[s].size()) != mdp.n_actions)
        throw InvalidModel("transition[" + std::to_string(s) + "] must have n_actions entries");
      for (int a = 0; a < mdp.n_actions; ++a) {
        const json& row = trans[s][a];
        if (!row.is_array() || static_cast<int>(row.size()) != mdp.n_states)
          throw InvalidModel("transition[" + std::to_string(s) + "][" + std::to_string(a) +
                             "] must have n_states entries");
        for (int s2 = 0; s2 < mdp.n_states; ++s2)
          mdp.transition(mdp.index(s, a), s2) = row[s2].get<double>();
      }
    }
    mdp.reward_mean = matrix_from(j, "reward_mean", mdp.n_states, mdp.n_actions);
    const json& d0 = field(j, "initial_dist");
    if (!d0.is_array() || static_cast<int>(d0.size()) != mdp.n_states)
      throw InvalidModel("initial_dist must have n_states entries");
    mdp.initial_dist.resize(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) mdp.initial_dist[s] = d0[s].get<double>();
    mdp.validate();
    return mdp;
  } catch (const json::exception& e) {
    throw InvalidModel(std::string("malformed MDP document: ") + e.what());
  }
}

json policy_to_json(const Policy& pi) {
  return json{{"n_states", pi.n_states()},
              {"n_actions", pi.n_actions()},
              {"action_probs", matrix_to(pi.action_probs)}};
}

Policy policy_from_json(const json& j) {
  try {
    const int s = field(j, "n_states").get<int>();
    const int a = field(j, "n_actions").get<int>();
    if (s <= 0 || a <= 0) throw InvalidModel("n_states and n_actions must be positive");
    Policy pi{matrix_from(j, "action_probs", s, a)};
    pi.validate();
    return pi;
  } catch (const json::exception& e) {
    throw InvalidModel(std::string("malformed policy document: ") + e.what());
  }
}

TabularMDP load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidModel("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidModel(path + ": " + e.what());
  }
  return mdp_from_json(j);
}

void save_mdp(const TabularMDP& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << mdp_to_json(mdp).dump(2) << '\n';
}

std::string mdp_hash(const TabularMDP& mdp) {
  const std::string text = mdp_to_json(mdp).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace offenv
