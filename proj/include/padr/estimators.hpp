#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "padr/augmentation.hpp"
#include "padr/balancing.hpp"
#include "padr/basis.hpp"
#include "padr/data.hpp"
#include "padr/link.hpp"
#include "padr/outcome.hpp"

namespace padr {

enum class Method { ps, or_, dr, pad, oad };

std::string to_string(Method m);
/// Accepts ps|or|dr|pad|oad (case-insensitive).
Method parse_method(std::string_view name);
/// Comma-separated list, e.g. "dr,pad".
std::vector<Method> parse_methods(std::string_view list);

struct EstimateResult {
  Method method = Method::dr;
  double point = 0.0;
  std::map<std::string, double> diagnostics;
  std::vector<double> beta;  // PAD / OAD loading vector
  std::optional<double> se;
  std::optional<std::pair<double, double>> ci;
};

/// Both nuisance fits, shared by every estimator run on the same data.
struct NuisanceFits {
  PropensityFit propensity;
  OutcomeFit outcome;
};

struct EstimatorOptions {
  LinkFamily family = LinkFamily::linear;
  SolverOptions ps_solver;
  SolverOptions or_solver;
  BasisSpec basis;
  double rwls_ridge = 0.0;
};

/// Fits the balancing propensity model and the outcome regression.
NuisanceFits fit_nuisances(const TwoSampleData& data, const EstimatorOptions& options);

/// mean_S Y exp(X'gamma)
EstimateResult estimate_ps(const TwoSampleData& data, const PropensityFit& propensity);

/// mean_T g(X'alpha)
EstimateResult estimate_or(const TwoSampleData& data, const OutcomeFit& outcome);

/// mean_S {Y - g(X'alpha)} exp(X'gamma) + mean_T g(X'alpha)
EstimateResult estimate_dr(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome);

/// mean_S {Y - g} {exp(X'gamma) + Psi'beta} + mean_T g for a given beta.
/// With beta = 0 this reproduces estimate_dr bit for bit.
double combine_pad(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome,
                   const Eigen::MatrixXd& psi_source, const Eigen::VectorXd& beta);

/// mean_S {Y - g - Psi'beta} exp(X'gamma) + mean_T {g + Psi'beta} for a given beta.
double combine_oad(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome,
                   const CalibratedBasis& basis, const Eigen::VectorXd& beta);

/// Full PAD pipeline on fitted nuisances: working variance, calibration,
/// L-hat, closed-form RWLS, combination.
EstimateResult estimate_pad(const TwoSampleData& data, const NuisanceFits& fits, const EstimatorOptions& options);

/// Full OAD pipeline: calibration against the fitted values, L*, KKT RWLS, combination.
EstimateResult estimate_oad(const TwoSampleData& data, const NuisanceFits& fits, const EstimatorOptions& options);

/// Runs one estimator on already fitted nuisances.
EstimateResult estimate(Method method, const TwoSampleData& data, const NuisanceFits& fits,
                        const EstimatorOptions& options);

/// Fits nuisances once and runs every requested method.
std::vector<EstimateResult> estimate_all(const std::vector<Method>& methods, const TwoSampleData& data,
                                         const EstimatorOptions& options);

/// Point estimates only, in the order of `methods`.
std::vector<double> estimate_points(const std::vector<Method>& methods, const TwoSampleData& data,
                                    const EstimatorOptions& options);

}  // namespace padr
