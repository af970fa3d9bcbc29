#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "offenv/errors.hpp"
#include "offenv/harness.hpp"
#include "offenv/weight_estimation.hpp"

using namespace offenv;
using fixtures::table_model;

namespace {

const auto kOneHot = [](int S, int A) { return std::make_shared<const FeatureMap>(FeatureMap::one_hot(S, A)); };

}  // namespace

TEST_CASE("L_w vanishes at the true weights for every q") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto in = fixtures::make_instance(seed, 5, 3);
    Rng rng(seed);
    for (int k = 0; k < 100; ++k) {
      const WeightModel q = table_model(fixtures::random_table(5, 3, rng, -5.0, 5.0));
      CHECK(loss_Lw(in.w_star(), in.beta_star(), q, in.real, in.d0, in.pi, 0.9) <= 1e-9);
    }
  }
}

TEST_CASE("L_w trivial cases") {
  const auto in = fixtures::make_instance(3, 4, 2);
  Rng rng(1);
  const WeightModel w = table_model(fixtures::random_table(4, 2, rng, 0.0, 3.0));
  CHECK(loss_Lw(w, in.beta_star(), WeightModel::constant(4, 2, 0.0), in.real, in.d0, in.pi, 0.9) == 0.0);
  // w beta = 1 and q = 1: (1 - gamma) - (1 - gamma).
  const WeightModel ones = WeightModel::constant(4, 2, 1.0);
  CHECK(loss_Lw(ones, ones, ones, in.real, in.d0, in.pi, 0.9) <= 1e-15);
}

TEST_CASE("L_w detects wrong weights") {
  const auto in = fixtures::make_instance(4, 4, 2);
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    const WeightModel w = table_model(in.exact.w_star + fixtures::random_table(4, 2, rng, -0.2, 0.2));
    double worst = 0.0;
    for (int j = 0; j < 200; ++j)
      worst = std::max(worst, loss_Lw(w, in.beta_star(), table_model(fixtures::random_table(4, 2, rng)), in.real,
                                      in.d0, in.pi, 0.9));
    CHECK(worst > 1e-6);
  }
}

TEST_CASE("witness reproduces L_w and sampled data route through datasets") {
  const auto in = fixtures::make_instance(5, 4, 3);
  const auto real = sample_offline_dataset(in.env.te, in.mu, 500, 1);
  const auto d0 = sample_initial_states(in.env.te, 200, 2);
  const auto rm = TransitionMeasure::from_dataset(real, 4, 3);
  const auto dm = TransitionMeasure::from_dataset(d0, 4, 3);
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const WeightModel w = table_model(fixtures::random_table(4, 3, rng, 0.0, 2.0));
    const WeightModel b = table_model(fixtures::random_table(4, 3, rng, 0.1, 2.0));
    const WeightModel q = table_model(fixtures::random_table(4, 3, rng));
    const double direct = loss_Lw(w, b, q, real, d0, in.pi, 0.9);
    // Plain per-sample average as an independent reference.
    double sum = 0.0;
    for (const auto& t : real.tuples) {
      double qn = 0.0;
      for (int a = 0; a < 3; ++a) qn += in.pi.action_probs(t.s_next, a) * q(t.s_next, a);
      sum += w(t.s, t.a) * b(t.s, t.a) * (q(t.s, t.a) - 0.9 * qn);
    }
    double init = 0.0;
    for (const auto& t : d0.tuples)
      for (int a = 0; a < 3; ++a) init += in.pi.action_probs(t.s, a) * q(t.s, a);
    CHECK(direct == doctest::Approx(std::abs(sum / 500.0 - 0.1 * init / 200.0)).epsilon(1e-10));
    const Eigen::VectorXd c = loss_Lw_witness(w, b, rm, dm, in.pi, 0.9);
    CHECK(std::abs(q.values().dot(c)) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("source checks") {
  const auto in = fixtures::make_instance(6, 3, 2);
  const WeightModel ones = WeightModel::constant(3, 2, 1.0);
  CHECK_THROWS_AS(loss_Lw(ones, ones, ones, in.sim, in.d0, in.pi, 0.9), SourceMismatch);
  CHECK_THROWS_AS(loss_Lw(ones, ones, ones, in.real, in.real, in.pi, 0.9), SourceMismatch);
  CHECK_THROWS_AS(ope_estimate(ones, in.real), SourceMismatch);
}

TEST_CASE("RKHS inner maximum dominates sampled unit-ball discriminators") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto in = fixtures::make_instance(seed + 10, 4, 3);
    const Kernel k = fixtures::random_embedding_kernel(4, 3, seed);
    const auto rm = TransitionMeasure::from_dataset(sample_offline_dataset(in.env.te, in.mu, 300, seed), 4, 3);
    const auto dm = TransitionMeasure::from_dataset(sample_initial_states(in.env.te, 100, seed), 4, 3);
    Rng rng(seed);
    const WeightModel w = table_model(fixtures::random_table(4, 3, rng, 0.0, 2.0));
    const WeightModel b = table_model(fixtures::random_table(4, 3, rng, 0.1, 2.0));
    const double sup = rkhs_inner_max(w, b, rm, dm, in.pi, 0.9, k);
    for (int j = 0; j < 200; ++j) {
      const WeightModel q = fixtures::unit_ball_function(k, 4, 3, rng);
      const double l = loss_Lw(w, b, q, rm, dm, in.pi, 0.9);
      CHECK(l * l <= sup * (1.0 + 1e-9) + 1e-15);
    }
  }
}

TEST_CASE("RKHS inner maximum at the truth and on empty data") {
  const auto in = fixtures::make_instance(20, 5, 2);
  const Kernel k = fixtures::random_embedding_kernel(5, 2, 1);
  CHECK(rkhs_inner_max(in.w_star(), in.beta_star(), in.real, in.d0, in.pi, 0.9, k) <= 1e-8);
  TransitionMeasure empty_real;
  empty_real.n_states = 5;
  empty_real.n_actions = 2;
  TransitionMeasure empty_d0 = empty_real;
  empty_d0.source = DataSource::initial_dist;
  CHECK(rkhs_inner_max(in.w_star(), in.beta_star(), empty_real, empty_d0, in.pi, 0.9, k) == 0.0);
}

// Population checks use ridge 0: the exact closed form. The default ridge is
// for sampled matrices and biases the solution by about ridge / sigma_min.
TEST_CASE("linear solve recovers w* with one-hot features") {
  const auto in = fixtures::make_instance(30, 5, 3);
  const auto phi = kOneHot(5, 3);
  const LinearSolve sol = linear_weight_solve(phi, phi, in.beta_star(), in.real, in.d0, in.pi, 0.9, 0.0);
  CHECK((sol.model.values() - in.w_star().values()).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(sol.clamp_fraction == 0.0);
  CHECK(std::abs(ope_estimate(sol.model, in.sim) - policy_value(in.env.te, in.pi)) <= 1e-9);

  SUBCASE("identical dynamics give w = 1") {
    const auto same = fixtures::make_instance(30, 5, 3);
    fixtures::Instance tr_only = same;
    tr_only.env.te = tr_only.env.tr;
    tr_only.real = TransitionMeasure::real_population(tr_only.env.te, tr_only.mu);
    const ExactWeights ew = exact_weight_tables(tr_only.env.te, tr_only.env.tr, tr_only.pi, tr_only.mu);
    const LinearSolve s1 =
        linear_weight_solve(phi, phi, table_model(ew.beta_star), tr_only.real, tr_only.d0, tr_only.pi, 0.9, 0.0);
    CHECK((s1.model.values().array() - 1.0).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("linear solve compensates for a wrong beta") {
  const auto in = fixtures::make_instance(31, 4, 3);
  const auto phi = kOneHot(4, 3);
  const Eigen::MatrixXd target = in.d_te.dist.cwiseQuotient(in.mu.dist);
  Rng rng(5);
  for (int k = 0; k < 10; ++k) {
    const Eigen::MatrixXd beta_tilde = fixtures::random_table(4, 3, rng, 0.2, 5.0);
    const LinearSolve sol = linear_weight_solve(phi, phi, table_model(beta_tilde), in.real, in.d0, in.pi, 0.9, 0.0);
    const Eigen::MatrixXd product = sol.model.table().cwiseProduct(beta_tilde);
    CHECK((product - target).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("sampled linear solve converges to w*") {
  const auto in = fixtures::make_instance(32, 4, 2);
  const auto phi = kOneHot(4, 2);
  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rm = TransitionMeasure::from_dataset(sample_offline_dataset(in.env.te, in.mu, 50000, seed), 4, 2);
    const auto dm = TransitionMeasure::from_dataset(sample_initial_states(in.env.te, 50000, seed + 50), 4, 2);
    const LinearSolve sol = linear_weight_solve(phi, phi, in.beta_star(), rm, dm, in.pi, 0.9);
    errs.push_back((sol.model.values() - in.w_star().values()).cwiseAbs().maxCoeff());
  }
  CHECK(median(errs) <= 0.05);
}

TEST_CASE("singular systems are rejected") {
  const auto in = fixtures::make_instance(33, 3, 2);
  const auto phi = kOneHot(3, 2);
  // A zero beta wipes out the data term entirely.
  CHECK_THROWS_AS(
      linear_weight_solve(phi, phi, WeightModel::constant(3, 2, 0.0), in.real, in.d0, in.pi, 0.9, 0.0),
      SingularSystem);
}

TEST_CASE("kernel-loss descent") {
  const auto in = fixtures::make_instance(40, 4, 2);
  const Kernel k = fixtures::random_embedding_kernel(4, 2, 2);
  const ModelClass cls = ModelClass::tabular(4, 2, 0.0, 1e6);

  SUBCASE("starting at w* stops immediately") {
    MinimaxFitConfig cfg;
    cfg.init_params = in.w_star().values();
    const MinimaxFit fit = rkhs_weight_fit(cls, in.beta_star(), in.real, in.d0, in.pi, 0.9, k, cfg);
    CHECK(fit.iterations == 0);
    CHECK(fit.objective <= 1e-8);
    CHECK(fit.converged);
  }
  SUBCASE("best-so-far trace is nonincreasing and the best iterate is returned") {
    MinimaxFitConfig cfg;
    cfg.max_iters = 300;
    const MinimaxFit fit = rkhs_weight_fit(cls, in.beta_star(), in.real, in.d0, in.pi, 0.9, k, cfg);
    double best = fit.trace.front();
    for (double v : fit.trace) best = std::min(best, v);
    CHECK(fit.objective == best);
    CHECK(fit.trace[fit.best_iter] == best);
    for (int i = 0; i < fit.best_iter; ++i) CHECK(fit.trace[i] > best);
    CHECK(rkhs_inner_max(fit.model, in.beta_star(), in.real, in.d0, in.pi, 0.9, k) ==
          doctest::Approx(fit.objective).epsilon(1e-9));
    CHECK(fit.objective < fit.trace.front());
  }
}

TEST_CASE("kernel-loss fit on identical dynamics stays near one") {
  const TabularMDP m = random_mdp(4, 2, 0.9, 41);
  const Policy pi = random_policy(4, 2, 1);
  const Occupancy mu = state_action_occupancy(m, random_policy(4, 2, 2));
  const ExactWeights ew = exact_weight_tables(m, m, pi, mu);
  const Kernel k(FeatureMap::one_hot(4, 2), std::sqrt(2.0));
  const ModelClass cls = ModelClass::tabular(4, 2, 0.0, 1e6);
  MinimaxFitConfig cfg;
  cfg.max_iters = 20000;
  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rm = TransitionMeasure::from_dataset(sample_offline_dataset(m, mu, 20000, seed), 4, 2);
    const auto dm = TransitionMeasure::from_dataset(sample_initial_states(m, 20000, seed + 99), 4, 2);
    const MinimaxFit fit = rkhs_weight_fit(cls, table_model(ew.beta_star), rm, dm, pi, 0.9, k, cfg);
    errs.push_back((fit.model.values().array() - 1.0).abs().maxCoeff());
  }
  CHECK(median(errs) <= 0.1);
}

TEST_CASE("final estimate") {
  const auto in = fixtures::make_instance(50, 5, 2);
  CHECK(std::abs(ope_estimate(in.w_star(), in.sim) - policy_value(in.env.te, in.pi)) <= 1e-9);
  CHECK(std::abs(ope_estimate(in.w_star(), in.sim, true) - policy_value(in.env.te, in.pi)) <= 1e-9);

  // Identity weights on the simulator's own samples give J_tr up to sampling error.
  const auto sim = sample_simulator_occupancy(in.env.tr, in.pi, 100000, 3);
  const double j_tr = policy_value(in.env.tr, in.pi);
  CHECK(std::abs(ope_estimate(WeightModel::constant(5, 2, 1.0), sim) - j_tr) <= 0.01);

  TabularMDP zero = in.env.tr;
  zero.reward_mean.setZero();
  const auto zm = TransitionMeasure::simulator_population(zero, in.d_tr);
  CHECK(ope_estimate(in.w_star(), zm) == 0.0);

  // Real-reward ablation: E_mu[w* beta* r] = J_te as well.
  CHECK(std::abs(ope_estimate_real_rewards(in.w_star(), in.beta_star(), in.real) - policy_value(in.env.te, in.pi)) <=
        1e-9);
}

TEST_CASE("report and trace serialization") {
  EstimationReport r{"beta_dice_rkhs", 100, 7, 0.25, 0.3, ""};
  const auto j = report_to_json(r);
  CHECK(j.at("estimator") == "beta_dice_rkhs");
  CHECK(j.at("j_te_exact") == 0.3);
  CHECK(j.at("loss_trace_path").is_null());
  const auto path = (std::filesystem::temp_directory_path() / "offenv_trace.csv").string();
  write_trace_csv({3.0, 2.0, 1.5}, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,objective");
  std::getline(in, line);
  CHECK(line == "0,3");
}
