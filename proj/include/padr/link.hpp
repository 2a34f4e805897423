#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "padr/data.hpp"

namespace padr {

/// Outcome model family: link g, its derivative, and the working
/// conditional-variance model that goes with it.
///   linear   g(a) = a         v(x) = sigma^2
///   logistic g(a) = expit(a)  v(x) = g'(x'alpha)
///   poisson  g(a) = exp(a)    v(x) = exp(x'alpha)
enum class LinkFamily { linear, logistic, poisson };

std::string to_string(LinkFamily family);
/// Throws UsageError for anything other than linear|logistic|poisson.
LinkFamily parse_link_family(std::string_view name);

struct LinkValue {
  double g;
  double g_dot;
};

/// Poisson linear predictors above this are rejected as overflow.
inline constexpr double kMaxExpArgument = 700.0;

/// Throws OverflowError for poisson with a > kMaxExpArgument.
LinkValue link_eval(LinkFamily family, double a);

/// Element-wise g and g' over a vector of linear predictors.
Eigen::VectorXd link_mean(LinkFamily family, const Eigen::VectorXd& eta);
Eigen::VectorXd link_derivative(LinkFamily family, const Eigen::VectorXd& eta);

/// Fitted working variance model v_theta.
struct VarianceModel {
  LinkFamily family = LinkFamily::linear;
  double sigma2 = 1.0;    // linear only
  Eigen::VectorXd alpha;  // logistic / poisson: theta is alpha-hat itself
};

/// linear: sigma2 = mean over source of (Y - X'alpha)^2 (divisor n);
/// otherwise alpha is carried through. Throws SolverError when the linear
/// residuals are all zero.
VarianceModel estimate_theta(LinkFamily family, const TwoSampleData& data,
                             const Eigen::VectorXd& alpha_hat);

/// v_theta(x); throws SolverError if the value is not strictly positive and finite.
double variance_eval(const VarianceModel& model, const Eigen::VectorXd& x);

/// v_theta at every row of `rows`.
Eigen::VectorXd variance_eval_rows(const VarianceModel& model, const Eigen::MatrixXd& rows);

}  // namespace padr
