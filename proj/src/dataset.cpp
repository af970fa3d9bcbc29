#include "offenv/dataset.hpp"

#include <fstream>
#include <sstream>

#include "offenv/errors.hpp"
#include "offenv/mdp_io.hpp"

namespace offenv {
namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<CategoricalSampler> next_state_samplers(const TabularMDP& mdp) {
  std::vector<CategoricalSampler> out;
  out.reserve(mdp.n_pairs());
  for (int x = 0; x < mdp.n_pairs(); ++x) out.emplace_back(to_std(mdp.transition.row(x).transpose()));
  return out;
}

TransitionDataset sample_pairs(const TabularMDP& mdp, const Occupancy& occ, std::size_t n,
                               std::uint64_t seed, DataSource source) {
  mdp.validate();
  occ.validate();
  if (occ.dist.rows() != mdp.n_states || occ.dist.cols() != mdp.n_actions)
    throw InvalidModel("occupancy shape does not match MDP");
  TransitionDataset out{{}, seed, source};
  if (n == 0) return out;
  const CategoricalSampler pairs(to_std(occ.flat()));
  const auto next = next_state_samplers(mdp);
  Rng rng(seed);
  out.tuples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int x = pairs.sample(rng);
    const int s = x / mdp.n_actions;
    const int a = x % mdp.n_actions;
    const double r = mdp.sample_reward(s, a, rng);
    out.tuples.push_back(Transition{s, a, r, next[x].sample(rng)});
  }
  return out;
}

}  // namespace

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::real_env: return "real_env";
    case DataSource::simulator_occupancy: return "simulator_occupancy";
    case DataSource::initial_dist: return "initial_dist";
  }
  return "unknown";
}

DataSource data_source_from_string(const std::string& name) {
  if (name == "real_env") return DataSource::real_env;
  if (name == "simulator_occupancy") return DataSource::simulator_occupancy;
  if (name == "initial_dist") return DataSource::initial_dist;
  throw InvalidModel("unknown data source '" + name + "'");
}

void TransitionDataset::validate(const TabularMDP& mdp) const {
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const Transition& t = tuples[i];
    const bool state_ok = t.s >= 0 && t.s < mdp.n_states;
    bool ok = state_ok;
    if (source != DataSource::initial_dist) {
      ok = ok && t.a >= 0 && t.a < mdp.n_actions && t.s_next >= 0 && t.s_next < mdp.n_states &&
           t.r >= 0.0 && t.r <= mdp.r_max;
    }
    if (!ok) throw InvalidModel("dataset tuple " + std::to_string(i) + " out of bounds");
  }
}

TransitionDataset sample_offline_dataset(const TabularMDP& mdp_te, const Occupancy& mu,
                                         std::size_t n, std::uint64_t seed) {
  return sample_pairs(mdp_te, mu, n, seed, DataSource::real_env);
}

TransitionDataset sample_simulator_occupancy(const TabularMDP& mdp_tr, const Occupancy& d_tr,
                                             std::size_t n, std::uint64_t seed) {
  return sample_pairs(mdp_tr, d_tr, n, seed, DataSource::simulator_occupancy);
}

TransitionDataset sample_simulator_occupancy(const TabularMDP& mdp_tr, const Policy& pi,
                                             std::size_t n, std::uint64_t seed) {
  return sample_simulator_occupancy(mdp_tr, state_action_occupancy(mdp_tr, pi), n, seed);
}

TransitionDataset sample_initial_states(const TabularMDP& mdp, std::size_t n, std::uint64_t seed) {
  mdp.validate();
  TransitionDataset out{{}, seed, DataSource::initial_dist};
  if (n == 0) return out;
  const CategoricalSampler start(to_std(mdp.initial_dist));
  Rng rng(seed);
  out.tuples.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.tuples.push_back(Transition{start.sample(rng), kNoAction, 0.0, kNoState});
  return out;
}

Eigen::MatrixXd empirical_pair_frequencies(const TransitionDataset& data, int n_states,
                                           int n_actions) {
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(n_states, n_actions);
  if (data.empty()) return freq;
  for (const Transition& t : data.tuples) freq(t.s, t.a) += 1.0;
  return freq / static_cast<double>(data.size());
}

nlohmann::json dataset_sidecar(const TransitionDataset& data, const TabularMDP& mdp) {
  return nlohmann::json{{"seed", data.seed},
                        {"source", to_string(data.source)},
                        {"n", data.size()},
                        {"mdp_hash", mdp_hash(mdp)},
                        {"noise_kernel", kNoiseKernel}};
}

void write_dataset(const TransitionDataset& data, const TabularMDP& mdp, const std::string& csv_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw Error("cannot write " + csv_path);
  csv.precision(17);
  csv << "s,a,r,s_next\n";
  for (const Transition& t : data.tuples) csv << t.s << ',' << t.a << ',' << t.r << ',' << t.s_next << '\n';
  std::ofstream side(csv_path + ".json");
  if (!side) throw Error("cannot write " + csv_path + ".json");
  side << dataset_sidecar(data, mdp).dump(2) << '\n';
}

TransitionDataset read_dataset(const std::string& csv_path) {
  std::ifstream side(csv_path + ".json");
  if (!side) throw Error("missing sidecar " + csv_path + ".json");
  nlohmann::json meta;
  side >> meta;
  TransitionDataset out;
  out.seed = meta.at("seed").get<std::uint64_t>();
  out.source = data_source_from_string(meta.at("source").get<std::string>());

  std::ifstream csv(csv_path);
  if (!csv) throw Error("cannot open " + csv_path);
  std::string line;
  std::getline(csv, line);
  if (line != "s,a,r,s_next") throw InvalidModel(csv_path + ": unexpected header '" + line + "'");
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Transition t;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(row >> t.s >> c1 >> t.a >> c2 >> t.r >> c3 >> t.s_next) || c1 != ',' || c2 != ',' || c3 != ',')
      throw InvalidModel(csv_path + ": malformed row '" + line + "'");
    out.tuples.push_back(t);
  }
  if (out.size() != meta.at("n").get<std::size_t>())
    throw InvalidModel(csv_path + ": row count disagrees with sidecar");
  return out;
}

}  // namespace offenv
