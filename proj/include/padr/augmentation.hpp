#pragma once

// Augmentation stage shared by the PAD and OAD estimators: calibrating the
// raw basis Phi into Psi, the plug-in correction vectors L and L*, and the two
// restricted weighted least squares (RWLS) problems that choose the loading
// vector beta.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "padr/balancing.hpp"
#include "padr/basis.hpp"
#include "padr/data.hpp"
#include "padr/link.hpp"
#include "padr/outcome.hpp"

namespace padr {

enum class BasisFlavor { pad, oad };

struct CalibratedBasis {
  BasisFlavor flavor = BasisFlavor::pad;
  Eigen::MatrixXd psi_source;  // n x p
  Eigen::MatrixXd psi_target;  // N x p
  // PAD: the constant shift c subtracted from every row.
  // OAD: the projection coefficients kappa; row i loses g_tilde_i * kappa.
  Eigen::VectorXd shift;
  Eigen::VectorXd g_tilde_source;  // OAD only
  Eigen::VectorXd g_tilde_target;  // OAD only
  std::vector<std::string> names;
  std::vector<std::string> warnings;

  Eigen::Index dim() const { return psi_source.cols(); }
};

/// Psi = Phi - mean_T[Phi v] / mean_T[v], the same shift on both samples, so
/// that mean_T Psi v = 0. Throws SolverError if mean_T v is not positive.
CalibratedBasis calibrate_pad(const RawBasis& phi, const VarianceModel& variance, const TwoSampleData& data);

/// g~ = g(X'alpha) - mean_T g(X'alpha) and Psi = Phi - g~ kappa' with
/// kappa = mean_T[Phi g~] / mean_T[g~^2], so that mean_T Psi g~ = 0.
/// Throws SolverError when the fitted values are constant on the target.
CalibratedBasis calibrate_oad(const RawBasis& phi, const OutcomeFit& outcome, const TwoSampleData& data);

/// L = -H^{-1} { mean_S X g'(X'alpha) exp(X'gamma) - mean_T X g'(X'alpha) },
/// H = mean_S X X' g'(X'alpha).
Eigen::VectorXd compute_L_hat(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome);

/// L* = { mean_S X exp(X'gamma) X' }^{-1} mean_S {Y - g(X'alpha)} exp(X'gamma) X
Eigen::VectorXd compute_L_star(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome);

struct RwlsSolution {
  Eigen::VectorXd beta_hat;
  double objective_at_beta = 0.0;
  double objective_at_zero = 0.0;
  double constraint_residual = 0.0;  // max-norm of the d constraint equations at beta_hat
  Eigen::VectorXd lagrange_multiplier;
};

/// Quadratic pieces of the PAD objective  V(beta) = const + 2 b'beta + beta' Sigma beta
/// under the constraint a' beta = 0.
struct PadProblem {
  Eigen::MatrixXd a;      // p x d : mean_S Psi X' g'
  Eigen::VectorXd b;      // p     : mean_S Psi e v + mean_S Psi X' v L
  Eigen::MatrixXd sigma;  // p x p : mean_S Psi Psi' v
  Eigen::VectorXd l_hat;
};

PadProblem assemble_pad_problem(const CalibratedBasis& basis, const VarianceModel& variance,
                                const PropensityFit& propensity, const OutcomeFit& outcome,
                                const TwoSampleData& data);

/// V(beta) = mean_S {e + Psi'beta}^2 v + 2 L' mean_S X {e + Psi'beta} v, evaluated sample by sample.
double pad_objective(const CalibratedBasis& basis, const VarianceModel& variance, const PropensityFit& propensity,
                     const Eigen::VectorXd& l_hat, const TwoSampleData& data, const Eigen::VectorXd& beta);

/// Closed-form RWLS solution
///   beta = S^{-1} a (a' S^{-1} a)^{-1} a' S^{-1} b - S^{-1} b,  S = Sigma + ridge I.
/// Throws SingularMatrixError naming the basis columns behind the smallest
/// eigenvalue when S is singular, or when a' S^{-1} a is singular.
RwlsSolution solve_rwls_pad(const CalibratedBasis& basis, const VarianceModel& variance,
                            const PropensityFit& propensity, const OutcomeFit& outcome, const TwoSampleData& data,
                            double ridge = 0.0);

/// Same, from already assembled pieces (objective values left at zero).
RwlsSolution solve_rwls_closed_form(const PadProblem& problem, double ridge = 0.0,
                                    const std::vector<std::string>& names = {});

/// OAD objective as an explicit quadratic  V(beta) = constant + 2 l'beta + beta' Q beta
/// under C beta = 0, with C = mean_S X Psi' e.
struct OadProblem {
  Eigen::MatrixXd q;  // p x p
  Eigen::VectorXd l;  // p
  Eigen::MatrixXd c;  // d x p
  double constant = 0.0;
  Eigen::VectorXd l_star;
};

OadProblem assemble_oad_problem(const CalibratedBasis& basis, const PropensityFit& propensity,
                                const OutcomeFit& outcome, const TwoSampleData& data);

/// n^-1 Var_S[(Y - g - Psi'beta) e] + N^-1 Var_T[g + Psi'beta]
///   + 2 L*' [N^-1 Cov_T(X, Psi'beta) + n^-1 Cov_S(X e, Psi'beta e)]
/// with divisor n (resp. N) in every sample moment.
double oad_objective(const CalibratedBasis& basis, const PropensityFit& propensity, const OutcomeFit& outcome,
                     const Eigen::VectorXd& l_star, const TwoSampleData& data, const Eigen::VectorXd& beta);

/// Solves the OAD problem through the KKT system [[Q, C'], [C, 0]] [beta; lambda] = [-l; 0].
RwlsSolution solve_rwls_oad(const CalibratedBasis& basis, const PropensityFit& propensity, const OutcomeFit& outcome,
                            const TwoSampleData& data);

/// min beta'Q beta + 2 l'beta  s.t. C beta = 0, via the KKT system.
/// Throws SingularMatrixError if the KKT matrix is singular.
RwlsSolution solve_equality_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& l, const Eigen::MatrixXd& c);

}  // namespace padr
