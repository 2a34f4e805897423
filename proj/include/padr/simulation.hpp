#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "padr/basis.hpp"
#include "padr/bootstrap.hpp"
#include "padr/data.hpp"
#include "padr/estimators.hpp"
#include "padr/link.hpp"

namespace padr {

/// The six data-generating processes. X ~ N(0, S) in three dimensions with
/// S_ij = 0.3^|i-j|.
///   G1/G2/L1/L2: P(source | X) = expit(X1 - 2 X2 + X3)             (log-linear ratio: PS correct)
///   G3/L3:       P(source | X) = expit(4 + X1 + X2 + X3 - 1.5|X1| - 1.5|X2| - |X3|)
///   G1/G3: Y = 0.5 X1 + 0.5 X2 + X3 + N(0,1)
///   G2:    Y = 0.5 X1 + 0.5 X2 + sin(X2 + 0.5 X3) + N(0,1)
///   L1/L3: Y ~ Bernoulli(expit(0.5 X1 + 0.5 X2 + X3))
///   L2:    Y ~ Bernoulli(expit(0.5 X1 + 0.5 X2 + sin(X2 + 0.5 X3)))
enum class SettingId { G1, G2, G3, L1, L2, L3 };

std::string to_string(SettingId id);
/// Throws UsageError listing the valid ids.
SettingId parse_setting(std::string_view name);
const std::vector<std::string>& setting_names();

/// Gaussian settings are fitted with the linear family, binary ones with logistic.
LinkFamily family_of(SettingId id);

/// P(sample is labeled | x) for raw covariates x = (X1, X2, X3).
double source_probability(SettingId id, const Eigen::Vector3d& x);

/// True conditional mean E[Y | x].
double true_regression(SettingId id, const Eigen::Vector3d& x);

/// Cholesky factor of the covariate covariance S_ij = 0.3^|i-j|.
Eigen::Matrix3d covariate_cholesky();

struct SimulationSetting {
  SettingId id = SettingId::G1;
  int n = 1000;
  int N = 1000;
  int reps = 1000;
  std::uint64_t seed = 0;
  std::optional<BootstrapConfig> bootstrap;  // enables coverage
  std::vector<Method> methods{Method::dr, Method::pad};
  BasisSpec basis = preset_sim(3);
  std::string basis_label = "sim";
  long mu0_draws = 10'000'000;
  std::uint64_t mu0_seed = 20'240'101;
  double max_failure_fraction = 0.05;
};

/// Stratified rejection sampling: draws (X, Delta, Y) until n source and N
/// target rows are collected; an intercept column is prepended. Throws
/// SolverError after 10^7 draws.
TwoSampleData generate_dataset(const SimulationSetting& setting, std::uint64_t replicate_seed);

/// Fraction of pooled draws that landed in the source sample during the last
/// generate_dataset call on this thread.
double last_source_fraction();

struct TruthEstimate {
  double mu0 = 0.0;
  double mc_se = 0.0;
  long draws = 0;
};

/// mu0 = E[m0(X) (1 - pi(X))] / E[1 - pi(X)], by weighted Monte Carlo over X ~ N(0, S).
TruthEstimate true_mu0(SettingId id, long draws, std::uint64_t seed);

/// Same estimator for arbitrary pi and m0 (used to check the oracle itself).
TruthEstimate weighted_truth(const std::function<double(const Eigen::Vector3d&)>& source_prob,
                             const std::function<double(const Eigen::Vector3d&)>& regression, long draws,
                             std::uint64_t seed);

struct MethodSummary {
  double mean = 0.0;
  double bias = 0.0;  // |mean - mu0|
  double se = 0.0;    // sd across replicates
  std::optional<double> cp;
  std::optional<double> mean_bootstrap_se;
  std::vector<double> points;
};

struct SimulationReport {
  SimulationSetting setting;
  TruthEstimate truth;
  std::map<Method, MethodSummary> methods;
  std::optional<double> re;  // Var(DR) / Var(PAD)
  int reps_completed = 0;
  int failures = 0;
  std::vector<double> pad_beta_norms;
  std::vector<double> oad_beta_norms;
};

/// Runs `reps` replicates in parallel (seeded per replicate) and aggregates
/// bias, SE, coverage and RE. Throws SolverError if more than
/// max_failure_fraction of replicates fail.
SimulationReport run_study(const SimulationSetting& setting);

/// Same, with mu0 supplied by the caller.
SimulationReport run_study(const SimulationSetting& setting, const TruthEstimate& truth);

}  // namespace padr
