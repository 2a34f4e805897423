#pragma once

#include <Eigen/Dense>

#include "padr/balancing.hpp"
#include "padr/data.hpp"
#include "padr/link.hpp"

namespace padr {

/// Outcome-regression fit m(x) = g(x'alpha).
struct OutcomeFit {
  LinkFamily family = LinkFamily::linear;
  Eigen::VectorXd alpha_hat;
  int iterations = 0;
  double score_norm = 0.0;        // max-norm of mean_S X (Y - g(X'alpha))
  Eigen::VectorXd fitted_source;  // g(X_i'alpha_hat), source rows
  Eigen::VectorXd fitted_target;  // g(X_j'alpha_hat), target rows
};

/// Solves mean_S X {Y - g(X'alpha)} = 0 by Newton-Raphson on the score
/// (IRLS for canonical links), starting at 0 and backtracking on the score
/// norm. The linear family finishes in one step.
///
/// Throws ValidationError for outcomes outside the family's range,
/// SingularMatrixError for a rank-deficient design and ConvergenceError for
/// non-convergence or logistic separation.
OutcomeFit fit_outcome(const TwoSampleData& data, LinkFamily family, const SolverOptions& options = {});

/// mean_S X (Y - g(X'alpha))
Eigen::VectorXd outcome_score(const TwoSampleData& data, LinkFamily family, const Eigen::VectorXd& alpha);

}  // namespace padr
