#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "offenv/dataset.hpp"
#include "offenv/kernel.hpp"
#include "offenv/measure.hpp"
#include "offenv/minimax.hpp"
#include "offenv/weight_model.hpp"

namespace offenv {

/// Default C_W: loose enough that it only catches runaway solutions.
inline constexpr double kDefaultWeightCap = 1e6;

/// |E_mu[w beta (q(s,a) - gamma q(s',pi))] - (1-gamma) E_d0[q(s,pi)]|.
/// `real` must be real_env data and `d0` initial_dist data; population measures
/// give the exact loss.
double loss_Lw(const WeightModel& w, const WeightModel& beta, const WeightModel& q,
               const TransitionMeasure& real, const TransitionMeasure& d0, const Policy& pi,
               double gamma);
double loss_Lw(const WeightModel& w, const WeightModel& beta, const WeightModel& q,
               const TransitionDataset& real, const TransitionDataset& d0, const Policy& pi,
               double gamma);

/// Signed measure c over pairs with L_w(w, beta, q) = |q^T c|.
Eigen::VectorXd loss_Lw_witness(const WeightModel& w, const WeightModel& beta,
                                const TransitionMeasure& real, const TransitionMeasure& d0,
                                const Policy& pi, double gamma);

/// max over the RKHS unit ball of L_w(w, beta, q)^2, i.e. c^T K c.
double rkhs_inner_max(const WeightModel& w, const WeightModel& beta, const TransitionMeasure& real,
                      const TransitionMeasure& d0, const Policy& pi, double gamma,
                      const Kernel& kernel);

struct LinearSolve {
  WeightModel model;
  Eigen::VectorXd params;
  double condition = 0.0;       ///< 2-norm condition number of the ridged matrix
  double clamp_fraction = 0.0;  ///< pairs whose raw value fell outside the clamp
};

/// Closed-form minimizer over w = phi^T alpha against the linear discriminator
/// class q = psi^T zeta:
/// alpha = (E_n[beta (psi(s,a) - gamma psi(s',pi)) phi(s,a)^T] + ridge I)^-1 (1-gamma) E_d0[psi(s,pi)].
/// The returned model clamps to [0, c_w]. Throws SingularSystem when the
/// ridged matrix has condition number above 1e12.
LinearSolve linear_weight_solve(FeatureMapPtr phi, FeatureMapPtr psi, const WeightModel& beta,
                                const TransitionMeasure& real, const TransitionMeasure& d0,
                                const Policy& pi, double gamma, double ridge_eps = 1e-8,
                                double c_w = kDefaultWeightCap);

/// Gradient descent on the w-parameters of rkhs_inner_max.
MinimaxFit rkhs_weight_fit(const ModelClass& w_class, const WeightModel& beta,
                           const TransitionMeasure& real, const TransitionMeasure& d0,
                           const Policy& pi, double gamma, const Kernel& kernel,
                           const MinimaxFitConfig& cfg);

/// E_{d_tr}[w r] over simulator data; with `normalize` the weights are first
/// rescaled so that E_{d_tr}[w] = 1.
double ope_estimate(const WeightModel& w_hat, const TransitionMeasure& sim, bool normalize = false);
double ope_estimate(const WeightModel& w_hat, const TransitionDataset& sim, bool normalize = false);

/// Ablation: E_mu[w beta r] over the real data's own rewards.
double ope_estimate_real_rewards(const WeightModel& w_hat, const WeightModel& beta,
                                 const TransitionMeasure& real);

struct EstimationReport {
  std::string estimator;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double j_hat = 0.0;
  std::optional<double> j_te_exact;
  std::string loss_trace_path;  ///< empty when no trace was written
};

nlohmann::json report_to_json(const EstimationReport& report);

/// CSV with header iter,objective.
void write_trace_csv(const std::vector<double>& trace, const std::string& path);

}  // namespace offenv
