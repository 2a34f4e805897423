#pragma once

#include <vector>

#include <Eigen/Dense>

#include "padr/data.hpp"

namespace padr {

/// Stopping rule shared by the nuisance solvers: max-norm of the
/// estimating-equation residual at most `tol`, within `max_iter` Newton steps.
struct SolverOptions {
  double tol = 1e-9;
  int max_iter = 100;
};

/// Covariate-balancing fit of the density ratio exp(x'gamma).
struct PropensityFit {
  Eigen::VectorXd gamma_hat;
  int iterations = 0;
  double gradient_norm = 0.0;       // max-norm of the balance residual
  Eigen::VectorXd weights_source;   // exp(X_i' gamma_hat), one per source row
  std::vector<double> objective_trace;  // tilting potential at each accepted iterate
};

/// Solves  mean_S X exp(X'gamma) = mean_T X  by damped Newton on the convex
/// potential F(gamma) = mean_S exp(X'gamma) - gamma' mean_T X, starting at 0.
///
/// Throws SingularMatrixError if the source design is rank deficient,
/// DivergenceError if the iterates run off to infinity (target moments
/// outside what reweighting the source can reach), ConvergenceError otherwise.
PropensityFit fit_propensity(const TwoSampleData& data, const SolverOptions& options = {});

/// F(gamma); +inf when exp overflows.
double balancing_potential(const TwoSampleData& data, const Eigen::VectorXd& gamma);

/// mean_S X exp(X'gamma) - mean_T X
Eigen::VectorXd balance_residual(const TwoSampleData& data, const Eigen::VectorXd& gamma);

}  // namespace padr
