#include "offenv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "offenv/dataset.hpp"
#include "offenv/errors.hpp"
#include "offenv/gradient_dice.hpp"
#include "offenv/q_estimation.hpp"
#include "offenv/rng.hpp"
#include "offenv/weight_estimation.hpp"

namespace offenv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* x) { return k == x; }))
      throw ConfigError(std::string("unknown key '") + k + "' in " + where);
  }
}

Cell read_cell(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("grid cells are [x, y] pairs");
  return Cell{j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> names{"beta_dice_linear", "beta_dice_rkhs", "beta_gradient_dice",
                                              "q_route",          "simulator_only", "vanilla_mis",
                                              "oracle"};
  return names;
}

void ExperimentConfig::validate() const {
  try {
    grid.validate();
  } catch (const InvalidModel& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(eps_sim)) throw ConfigError("eps_sim must lie in [0, 1]");
  if (eps_real_list.empty() || delta_list.empty() || alpha_list.empty() || n_list.empty() ||
      seeds.empty() || estimators.empty())
    throw ConfigError("eps_real_list, delta_list, alpha_list, n_list, seeds and estimators must be nonempty");
  for (double v : eps_real_list)
    if (!in_unit(v)) throw ConfigError("eps_real values must lie in [0, 1]");
  for (double v : delta_list)
    if (!in_unit(v)) throw ConfigError("delta values must lie in [0, 1]");
  for (double v : alpha_list)
    if (!in_unit(v)) throw ConfigError("alpha values must lie in [0, 1]");
  for (std::size_t n : n_list)
    if (n == 0) throw ConfigError("n values must be positive");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
  const auto& known = known_estimators();
  for (const auto& e : estimators)
    if (std::find(known.begin(), known.end(), e) == known.end()) throw ConfigError("unknown estimator '" + e + "'");
  if (std::set<std::string>(estimators.begin(), estimators.end()).size() != estimators.size())
    throw ConfigError("estimators must be distinct");
  if (!(sim_ratio > 0.0)) throw ConfigError("sim_ratio must be positive");
  if (w_features != "state_indicator" && w_features != "one_hot")
    throw ConfigError("w_features must be state_indicator or one_hot");
  if (!(weight_cap > 0.0)) throw ConfigError("weight_cap must be positive");
  if (!(bandwidth >= 0.0)) throw ConfigError("bandwidth must be >= 0");
  try {
    ratio.validate();
    minimax.validate();
  } catch (const InvalidModel& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    reject_unknown(j,
                   {"grid", "eps_sim", "eps_real_list", "delta_list", "alpha_list", "n_list", "seeds",
                    "estimators", "output_dir", "master_seed", "options"},
                   "config");
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      reject_unknown(g, {"width", "height", "goal", "start", "step_reward", "goal_reward", "gamma", "r_max"},
                     "grid");
      read_opt(g, "width", cfg.grid.width);
      read_opt(g, "height", cfg.grid.height);
      if (g.contains("goal")) cfg.grid.goal = read_cell(g.at("goal"));
      if (g.contains("start")) cfg.grid.start = read_cell(g.at("start"));
      read_opt(g, "step_reward", cfg.grid.step_reward);
      read_opt(g, "goal_reward", cfg.grid.goal_reward);
      read_opt(g, "gamma", cfg.grid.gamma);
      read_opt(g, "r_max", cfg.grid.r_max);
    }
    read_opt(j, "eps_sim", cfg.eps_sim);
    read_opt(j, "eps_real_list", cfg.eps_real_list);
    read_opt(j, "delta_list", cfg.delta_list);
    read_opt(j, "alpha_list", cfg.alpha_list);
    read_opt(j, "n_list", cfg.n_list);
    read_opt(j, "seeds", cfg.seeds);
    read_opt(j, "estimators", cfg.estimators);
    read_opt(j, "output_dir", cfg.output_dir);
    read_opt(j, "master_seed", cfg.master_seed);
    if (j.contains("options")) {
      const auto& o = j.at("options");
      reject_unknown(o,
                     {"sim_ratio", "n_initial", "w_features", "weight_cap", "normalize_weights", "bandwidth",
                      "ratio", "minimax"},
                     "options");
      read_opt(o, "sim_ratio", cfg.sim_ratio);
      read_opt(o, "n_initial", cfg.n_initial);
      read_opt(o, "w_features", cfg.w_features);
      read_opt(o, "weight_cap", cfg.weight_cap);
      read_opt(o, "normalize_weights", cfg.normalize_weights);
      read_opt(o, "bandwidth", cfg.bandwidth);
      if (o.contains("ratio")) {
        const auto& r = o.at("ratio");
        reject_unknown(r, {"reg_lambda", "learning_rate", "max_iters", "tol", "method"}, "options.ratio");
        read_opt(r, "reg_lambda", cfg.ratio.reg_lambda);
        read_opt(r, "learning_rate", cfg.ratio.learning_rate);
        read_opt(r, "max_iters", cfg.ratio.max_iters);
        read_opt(r, "tol", cfg.ratio.tol);
        if (r.contains("method")) {
          const auto m = r.at("method").get<std::string>();
          if (m == "newton") cfg.ratio.method = RatioOptimizer::newton;
          else if (m == "gradient") cfg.ratio.method = RatioOptimizer::gradient;
          else throw ConfigError("options.ratio.method must be newton or gradient");
        }
      }
      if (o.contains("minimax")) {
        const auto& m = o.at("minimax");
        reject_unknown(m,
                       {"learning_rate_w", "learning_rate_inner", "step_scale", "max_iters", "ridge_eps",
                        "gd_lambda", "objective_tol"},
                       "options.minimax");
        read_opt(m, "learning_rate_w", cfg.minimax.learning_rate_w);
        read_opt(m, "learning_rate_inner", cfg.minimax.learning_rate_inner);
        read_opt(m, "step_scale", cfg.minimax.step_scale);
        read_opt(m, "max_iters", cfg.minimax.max_iters);
        read_opt(m, "ridge_eps", cfg.minimax.ridge_eps);
        read_opt(m, "gd_lambda", cfg.minimax.gd_lambda);
        read_opt(m, "objective_tol", cfg.minimax.objective_tol);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  const auto method = cfg.ratio.method == RatioOptimizer::newton ? "newton" : "gradient";
  return {
      {"grid",
       {{"width", cfg.grid.width},
        {"height", cfg.grid.height},
        {"goal", {cfg.grid.goal.x, cfg.grid.goal.y}},
        {"start", {cfg.grid.start.x, cfg.grid.start.y}},
        {"step_reward", cfg.grid.step_reward},
        {"goal_reward", cfg.grid.goal_reward},
        {"gamma", cfg.grid.gamma},
        {"r_max", cfg.grid.r_max}}},
      {"eps_sim", cfg.eps_sim},
      {"eps_real_list", cfg.eps_real_list},
      {"delta_list", cfg.delta_list},
      {"alpha_list", cfg.alpha_list},
      {"n_list", cfg.n_list},
      {"seeds", cfg.seeds},
      {"estimators", cfg.estimators},
      {"output_dir", cfg.output_dir},
      {"master_seed", cfg.master_seed},
      {"options",
       {{"sim_ratio", cfg.sim_ratio},
        {"n_initial", cfg.n_initial},
        {"w_features", cfg.w_features},
        {"weight_cap", cfg.weight_cap},
        {"normalize_weights", cfg.normalize_weights},
        {"bandwidth", cfg.bandwidth},
        {"ratio",
         {{"reg_lambda", cfg.ratio.reg_lambda},
          {"learning_rate", cfg.ratio.learning_rate},
          {"max_iters", cfg.ratio.max_iters},
          {"tol", cfg.ratio.tol},
          {"method", method}}},
        {"minimax",
         {{"learning_rate_w", cfg.minimax.learning_rate_w},
          {"learning_rate_inner", cfg.minimax.learning_rate_inner},
          {"step_scale", cfg.minimax.step_scale},
          {"max_iters", cfg.minimax.max_iters},
          {"ridge_eps", cfg.minimax.ridge_eps},
          {"gd_lambda", cfg.minimax.gd_lambda},
          {"objective_tol", cfg.minimax.objective_tol}}}}}};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

double baseline_simulator_only(const TabularMDP& mdp_tr, const Policy& pi) { return policy_value(mdp_tr, pi); }

double baseline_vanilla_mis(const TransitionMeasure& real, const TransitionMeasure& d0,
                            const Policy& pi, double gamma, const ModelClass& w_class,
                            const Kernel& kernel, const MinimaxFitConfig& cfg) {
  const WeightModel ones = WeightModel::constant(real.n_states, real.n_actions, 1.0);
  const MinimaxFit fit = rkhs_weight_fit(w_class, ones, real, d0, pi, gamma, kernel, cfg);
  return ope_estimate_real_rewards(fit.model, ones, real);
}

namespace {

struct CellKey {
  double eps_real;
  double delta;
  double alpha;
  std::size_t n;
  std::uint64_t seed;
};

std::vector<CellKey> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<CellKey> cells;
  for (double e : cfg.eps_real_list)
    for (double d : cfg.delta_list)
      for (double a : cfg.alpha_list)
        for (std::size_t n : cfg.n_list)
          for (std::uint64_t s : cfg.seeds) cells.push_back({e, d, a, n, s});
  return cells;
}

std::vector<ResultRow> run_cell(const ExperimentConfig& cfg, const CellKey& key, std::uint64_t cell_seed) {
  std::vector<ResultRow> rows;
  auto base_row = [&](const std::string& est) {
    ResultRow r;
    r.estimator = est;
    r.eps_real = key.eps_real;
    r.delta = key.delta;
    r.alpha = key.alpha;
    r.n = key.n;
    r.seed = key.seed;
    r.j_hat = kNaN;
    r.j_te_exact = kNaN;
    r.abs_err = kNaN;
    r.sq_err = kNaN;
    return r;
  };

  // Environment, policies and exact values. A failure here tags every row.
  MdpPair envs;
  Policy target;
  Occupancy mu;
  double j_te = kNaN;
  try {
    envs = build_gridworld_pair(cfg.grid, cfg.eps_sim, key.eps_real);
    const Policy base = policy_iteration(envs.simulator);
    const Policy behavior = mix_policy(base, key.delta);
    target = mix_policy(base, key.alpha);
    mu = state_action_occupancy(envs.real, behavior);
    j_te = policy_value(envs.real, target);
  } catch (const std::exception& e) {
    for (const auto& est : cfg.estimators) {
      ResultRow r = base_row(est);
      r.error = std::string("setup: ") + e.what();
      rows.push_back(std::move(r));
    }
    return rows;
  }

  const TabularMDP& te = envs.real;
  const TabularMDP& tr = envs.simulator;
  const int n_s = te.n_states;
  const int n_a = te.n_actions;
  const double gamma = te.gamma;
  const auto n_sim = static_cast<std::size_t>(std::llround(cfg.sim_ratio * static_cast<double>(key.n)));
  const std::size_t n_init = cfg.n_initial ? cfg.n_initial : key.n;

  // Data and fitted quantities shared by all estimators of the cell, built lazily.
  std::optional<TransitionMeasure> real_m, sim_m, d0_m;
  std::optional<WeightModel> beta_hat;
  KernelPtr kernel;
  auto real = [&]() -> const TransitionMeasure& {
    if (!real_m)
      real_m = TransitionMeasure::from_dataset(sample_offline_dataset(te, mu, key.n, derive_seed(cell_seed, 1)),
                                               n_s, n_a);
    return *real_m;
  };
  auto sim = [&]() -> const TransitionMeasure& {
    if (!sim_m)
      sim_m = TransitionMeasure::from_dataset(sample_simulator_occupancy(tr, target, n_sim, derive_seed(cell_seed, 2)),
                                              n_s, n_a);
    return *sim_m;
  };
  auto d0 = [&]() -> const TransitionMeasure& {
    if (!d0_m)
      d0_m = TransitionMeasure::from_dataset(sample_initial_states(te, n_init, derive_seed(cell_seed, 3)), n_s, n_a);
    return *d0_m;
  };
  auto beta = [&]() -> const WeightModel& {
    if (!beta_hat) {
      // Numerator: simulator occupancy samples; denominator: offline data.
      Eigen::MatrixXd fp = Eigen::MatrixXd::Zero(n_s, n_a);
      Eigen::MatrixXd fq = Eigen::MatrixXd::Zero(n_s, n_a);
      for (const auto& it : sim().items) fp(it.s, it.a) += it.weight;
      for (const auto& it : real().items) fq(it.s, it.a) += it.weight;
      beta_hat = fit_density_ratio(fp, fq, PositiveFunctionClass::tabular(n_s, n_a), cfg.ratio).model;
    }
    return *beta_hat;
  };
  auto kern = [&]() -> const Kernel& {
    if (!kernel) {
      FeatureMap emb = FeatureMap::one_hot(n_s, n_a);
      double h = cfg.bandwidth;
      if (h == 0.0) {
        std::vector<int> pairs;
        for (const auto& it : real().items) pairs.push_back(it.s * n_a + it.a);
        h = median_pairwise_distance(emb, pairs);
      }
      kernel = std::make_shared<const Kernel>(std::move(emb), h);
    }
    return *kernel;
  };
  const auto w_features = std::make_shared<const FeatureMap>(
      cfg.w_features == "one_hot" ? FeatureMap::one_hot(n_s, n_a) : FeatureMap::state_indicator(n_s, n_a));
  const auto one_hot = std::make_shared<const FeatureMap>(FeatureMap::one_hot(n_s, n_a));
  const ModelClass w_class = ModelClass::linear(w_features, 0.0, cfg.weight_cap);

  for (const auto& est : cfg.estimators) {
    ResultRow r = base_row(est);
    r.j_te_exact = j_te;
    try {
      double j_hat = kNaN;
      if (est == "oracle") {
        j_hat = j_te;
      } else if (est == "simulator_only") {
        j_hat = baseline_simulator_only(tr, target);
      } else if (est == "beta_dice_linear") {
        const LinearSolve sol = linear_weight_solve(w_features, w_features, beta(), real(), d0(), target, gamma,
                                                    cfg.minimax.ridge_eps, cfg.weight_cap);
        j_hat = ope_estimate(sol.model, sim(), cfg.normalize_weights);
      } else if (est == "beta_dice_rkhs") {
        const MinimaxFit fit = rkhs_weight_fit(w_class, beta(), real(), d0(), target, gamma, kern(), cfg.minimax);
        j_hat = ope_estimate(fit.model, sim(), cfg.normalize_weights);
      } else if (est == "beta_gradient_dice") {
        const ModelClass f_class = ModelClass::tabular(n_s, n_a, -kUnbounded, kUnbounded);
        const GradientDiceFit fit =
            beta_gradient_dice_fit(w_class, f_class, beta(), real(), sim(), d0(), target, gamma, cfg.minimax);
        j_hat = ope_estimate(fit.tau, sim(), cfg.normalize_weights);
      } else if (est == "q_route") {
        const LinearSolve sol = linear_q_solve(one_hot, one_hot, beta(), real(), sim(), target, gamma,
                                               cfg.minimax.ridge_eps, te.r_max / (1.0 - gamma));
        j_hat = ope_from_q(sol.model, d0(), target, gamma);
      } else if (est == "vanilla_mis") {
        j_hat = baseline_vanilla_mis(real(), d0(), target, gamma, w_class, kern(), cfg.minimax);
      }
      if (!std::isfinite(j_hat)) throw NumericalError("estimate is not finite");
      r.j_hat = j_hat;
      r.abs_err = std::abs(j_hat - j_te);
      r.sq_err = r.abs_err * r.abs_err;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  const std::vector<CellKey> cells = enumerate_cells(cfg);
  std::vector<std::vector<ResultRow>> per_cell(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++)
      per_cell[i] = run_cell(cfg, cells[i], derive_seed(cfg.master_seed, i));
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<ResultRow> rows;
  for (auto& c : per_cell)
    for (auto& r : c) rows.push_back(std::move(r));
  return rows;
}

std::vector<MseCell> log10_mse_table(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<std::string, double, double, double, std::size_t>;
  std::map<Key, MseCell> cells;
  std::map<Key, double> sums;
  for (const auto& r : rows) {
    const Key k{r.estimator, r.eps_real, r.delta, r.alpha, r.n};
    MseCell& c = cells[k];
    c.estimator = r.estimator;
    c.eps_real = r.eps_real;
    c.delta = r.delta;
    c.alpha = r.alpha;
    c.n = r.n;
    if (!r.error.empty()) {
      ++c.failures;
      continue;
    }
    ++c.count;
    sums[k] += r.sq_err;
  }
  std::vector<MseCell> out;
  for (auto& [k, c] : cells) {
    if (c.count == 0) {
      c.mse = kNaN;
      c.log10_mse = kNaN;
    } else {
      c.mse = sums[k] / static_cast<double>(c.count);
      c.log10_mse = c.mse > 0.0 ? std::log10(c.mse) : -std::numeric_limits<double>::infinity();
    }
    out.push_back(c);
  }
  return out;
}

std::string format_log10(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

double loglog_slope(const std::vector<double>& n, const std::vector<double>& err) {
  if (n.size() != err.size()) throw DomainError("loglog_slope: size mismatch");
  if (std::set<double>(n.begin(), n.end()).size() < 2) throw DomainError("loglog_slope needs two distinct n");
  double mx = 0.0, my = 0.0;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(err[i] > 0.0)) throw DomainError("loglog_slope needs positive values");
    xs.push_back(std::log10(n[i]));
    ys.push_back(std::log10(err[i]));
    mx += xs.back();
    my += ys.back();
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

double rate_fit(const std::vector<ResultRow>& rows, const std::string& estimator) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : rows)
    if (r.estimator == estimator && r.error.empty()) by_n[r.n].push_back(r.abs_err);
  std::vector<double> ns, meds;
  for (const auto& [n, errs] : by_n) {
    ns.push_back(static_cast<double>(n));
    meds.push_back(median(errs));
  }
  return loglog_slope(ns, meds);
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

const char* kResultHeader = "estimator,eps_real,delta,alpha,n,seed,j_hat,j_te_exact,abs_err,sq_err,error";

}  // namespace

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << kResultHeader << '\n';
  for (const auto& r : rows)
    out << r.estimator << ',' << fmt(r.eps_real) << ',' << fmt(r.delta) << ',' << fmt(r.alpha) << ',' << r.n
        << ',' << r.seed << ',' << fmt(r.j_hat) << ',' << fmt(r.j_te_exact) << ',' << fmt(r.abs_err) << ','
        << fmt(r.sq_err) << ',' << quote(r.error) << '\n';
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kResultHeader) throw Error(path + ": unexpected results header");
  std::vector<ResultRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 11) throw Error(path + ":" + std::to_string(line_no) + ": expected 11 fields");
    try {
      ResultRow r;
      r.estimator = f[0];
      r.eps_real = std::stod(f[1]);
      r.delta = std::stod(f[2]);
      r.alpha = std::stod(f[3]);
      r.n = std::stoull(f[4]);
      r.seed = std::stoull(f[5]);
      r.j_hat = std::stod(f[6]);
      r.j_te_exact = std::stod(f[7]);
      r.abs_err = std::stod(f[8]);
      r.sq_err = std::stod(f[9]);
      r.error = f[10];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(path + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

void write_mse_csv(const std::vector<MseCell>& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "estimator,eps_real,delta,alpha,n,count,failures,mse,log10_mse\n";
  for (const auto& c : table)
    out << c.estimator << ',' << fmt(c.eps_real) << ',' << fmt(c.delta) << ',' << fmt(c.alpha) << ',' << c.n << ','
        << c.count << ',' << c.failures << ',' << fmt(c.mse) << ',' << format_log10(c.log10_mse) << '\n';
}

namespace {

std::vector<std::string> estimators_in(const std::vector<ResultRow>& rows) {
  std::vector<std::string> names;
  for (const auto& r : rows)
    if (std::find(names.begin(), names.end(), r.estimator) == names.end()) names.push_back(r.estimator);
  return names;
}

}  // namespace

std::string format_report(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %8s %6s %6s %8s %6s %6s %12s\n", "estimator", "eps_real", "delta", "alpha",
                "n", "rows", "fail", "log10_mse");
  out << buf;
  for (const auto& c : log10_mse_table(rows)) {
    std::snprintf(buf, sizeof buf, "%-20s %8.3f %6.3f %6.3f %8zu %6zu %6zu %12s\n", c.estimator.c_str(), c.eps_real,
                  c.delta, c.alpha, c.n, c.count, c.failures, format_log10(c.log10_mse).c_str());
    out << buf;
  }
  out << "\nrate slopes (log10 median abs_err vs log10 n)\n";
  for (const auto& est : estimators_in(rows)) {
    std::string slope;
    try {
      slope = format_log10(rate_fit(rows, est));
    } catch (const DomainError&) {
      slope = "n/a";
    }
    std::snprintf(buf, sizeof buf, "%-20s %12s\n", est.c_str(), slope.c_str());
    out << buf;
  }
  return out.str();
}

nlohmann::json sweep_summary(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["n_rows"] = rows.size();
  std::size_t failures = 0;
  for (const auto& r : rows) failures += r.error.empty() ? 0 : 1;
  j["n_failures"] = failures;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& c : log10_mse_table(rows))
    table.push_back({{"estimator", c.estimator},
                     {"eps_real", c.eps_real},
                     {"delta", c.delta},
                     {"alpha", c.alpha},
                     {"n", c.n},
                     {"count", c.count},
                     {"failures", c.failures},
                     {"log10_mse", format_log10(c.log10_mse)}});
  j["log10_mse"] = table;
  nlohmann::json slopes = nlohmann::json::object();
  for (const auto& est : estimators_in(rows)) {
    try {
      slopes[est] = rate_fit(rows, est);
    } catch (const DomainError&) {
      slopes[est] = nullptr;
    }
  }
  j["rate_slopes"] = slopes;
  return j;
}

}  // namespace offenv
