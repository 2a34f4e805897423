#include "padr/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "padr/errors.hpp"
#include "padr/kernels.hpp"

namespace padr {

namespace {

void add_nuisance_diagnostics(EstimateResult& r, const NuisanceFits& fits) {
  r.diagnostics["balance_residual"] = fits.propensity.gradient_norm;
  r.diagnostics["ps_iterations"] = fits.propensity.iterations;
  r.diagnostics["score_residual"] = fits.outcome.score_norm;
  r.diagnostics["or_iterations"] = fits.outcome.iterations;
}

void add_rwls_diagnostics(EstimateResult& r, const RwlsSolution& sol) {
  r.diagnostics["beta_norm"] = sol.beta_hat.norm();
  r.diagnostics["constraint_residual"] = sol.constraint_residual;
  r.diagnostics["objective_at_beta"] = sol.objective_at_beta;
  r.diagnostics["objective_at_zero"] = sol.objective_at_zero;
  r.beta.assign(sol.beta_hat.data(), sol.beta_hat.data() + sol.beta_hat.size());
}

template <class Fn>
auto with_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string(stage) + ": " + e.what(), e.residual());
  } catch (const SolverError& e) {
    throw SolverError(std::string(stage) + ": " + e.what());
  }
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::ps: return "PS";
    case Method::or_: return "OR";
    case Method::dr: return "DR";
    case Method::pad: return "PAD";
    case Method::oad: return "OAD";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ps") return Method::ps;
  if (s == "or") return Method::or_;
  if (s == "dr") return Method::dr;
  if (s == "pad") return Method::pad;
  if (s == "oad") return Method::oad;
  throw UsageError("unknown method '" + std::string(name) + "' (expected ps|or|dr|pad|oad)");
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string_view::npos ? list.npos : comma - start);
    if (!item.empty()) {
      const Method m = parse_method(item);
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw UsageError("no estimation method given");
  return out;
}

NuisanceFits fit_nuisances(const TwoSampleData& data, const EstimatorOptions& options) {
  NuisanceFits fits;
  fits.propensity = with_stage("propensity", [&] { return fit_propensity(data, options.ps_solver); });
  fits.outcome = with_stage("outcome regression", [&] { return fit_outcome(data, options.family, options.or_solver); });
  return fits;
}

EstimateResult estimate_ps(const TwoSampleData& data, const PropensityFit& propensity) {
  EstimateResult r;
  r.method = Method::ps;
  r.point = kernels::mean(data.source_y.cwiseProduct(propensity.weights_source));
  r.diagnostics["balance_residual"] = propensity.gradient_norm;
  return r;
}

EstimateResult estimate_or(const TwoSampleData&, const OutcomeFit& outcome) {
  EstimateResult r;
  r.method = Method::or_;
  r.point = kernels::mean(outcome.fitted_target);
  r.diagnostics["score_residual"] = outcome.score_norm;
  return r;
}

EstimateResult estimate_dr(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome) {
  EstimateResult r;
  r.method = Method::dr;
  const Eigen::VectorXd resid = data.source_y - outcome.fitted_source;
  r.point = kernels::mean(resid.cwiseProduct(propensity.weights_source)) + kernels::mean(outcome.fitted_target);
  return r;
}

double combine_pad(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome,
                   const Eigen::MatrixXd& psi_source, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd resid = data.source_y - outcome.fitted_source;
  const Eigen::VectorXd aug = propensity.weights_source + psi_source * beta;
  return kernels::mean(resid.cwiseProduct(aug)) + kernels::mean(outcome.fitted_target);
}

double combine_oad(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome,
                   const CalibratedBasis& basis, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd resid = data.source_y - outcome.fitted_source - basis.psi_source * beta;
  const Eigen::VectorXd fitted = outcome.fitted_target + basis.psi_target * beta;
  return kernels::mean(resid.cwiseProduct(propensity.weights_source)) + kernels::mean(fitted);
}

EstimateResult estimate_pad(const TwoSampleData& data, const NuisanceFits& fits, const EstimatorOptions& options) {
  return with_stage("PAD", [&] {
    const VarianceModel variance = estimate_theta(options.family, data, fits.outcome.alpha_hat);
    const RawBasis phi = build_basis(options.basis, data);
    const CalibratedBasis psi = calibrate_pad(phi, variance, data);
    const RwlsSolution sol = solve_rwls_pad(psi, variance, fits.propensity, fits.outcome, data, options.rwls_ridge);

    EstimateResult r;
    r.method = Method::pad;
    r.point = combine_pad(data, fits.propensity, fits.outcome, psi.psi_source, sol.beta_hat);
    add_nuisance_diagnostics(r, fits);
    add_rwls_diagnostics(r, sol);
    r.diagnostics["calibration_residual"] =
        kernels::weighted_mean(psi.psi_target, variance_eval_rows(variance, data.target_x)).lpNorm<Eigen::Infinity>();
    if (options.family == LinkFamily::linear) r.diagnostics["sigma2"] = variance.sigma2;
    r.diagnostics["degenerate_basis_columns"] = static_cast<double>(phi.warnings.size());
    return r;
  });
}

EstimateResult estimate_oad(const TwoSampleData& data, const NuisanceFits& fits, const EstimatorOptions& options) {
  return with_stage("OAD", [&] {
    const RawBasis phi = build_basis(options.basis, data);
    const CalibratedBasis psi = calibrate_oad(phi, fits.outcome, data);
    const RwlsSolution sol = solve_rwls_oad(psi, fits.propensity, fits.outcome, data);

    EstimateResult r;
    r.method = Method::oad;
    r.point = combine_oad(data, fits.propensity, fits.outcome, psi, sol.beta_hat);
    add_nuisance_diagnostics(r, fits);
    add_rwls_diagnostics(r, sol);
    r.diagnostics["calibration_residual"] =
        kernels::weighted_mean(psi.psi_target, psi.g_tilde_target).lpNorm<Eigen::Infinity>();
    r.diagnostics["degenerate_basis_columns"] = static_cast<double>(phi.warnings.size());
    return r;
  });
}

EstimateResult estimate(Method method, const TwoSampleData& data, const NuisanceFits& fits,
                        const EstimatorOptions& options) {
  EstimateResult r;
  switch (method) {
    case Method::ps: r = estimate_ps(data, fits.propensity); break;
    case Method::or_: r = estimate_or(data, fits.outcome); break;
    case Method::dr:
      r = estimate_dr(data, fits.propensity, fits.outcome);
      add_nuisance_diagnostics(r, fits);
      break;
    case Method::pad: r = estimate_pad(data, fits, options); break;
    case Method::oad: r = estimate_oad(data, fits, options); break;
  }
  if (!std::isfinite(r.point)) throw SolverError(to_string(method) + ": point estimate is not finite");
  return r;
}

std::vector<EstimateResult> estimate_all(const std::vector<Method>& methods, const TwoSampleData& data,
                                         const EstimatorOptions& options) {
  const NuisanceFits fits = fit_nuisances(data, options);
  std::vector<EstimateResult> out;
  out.reserve(methods.size());
  for (Method m : methods) out.push_back(estimate(m, data, fits, options));
  return out;
}

std::vector<double> estimate_points(const std::vector<Method>& methods, const TwoSampleData& data,
                                    const EstimatorOptions& options) {
  std::vector<double> out;
  for (const auto& r : estimate_all(methods, data, options)) out.push_back(r.point);
  return out;
}

}  // namespace padr
