#include "padr/link.hpp"

#include <cmath>
#include <sstream>

#include "padr/errors.hpp"

namespace padr {

std::string to_string(LinkFamily family) {
  switch (family) {
    case LinkFamily::linear: return "linear";
    case LinkFamily::logistic: return "logistic";
    case LinkFamily::poisson: return "poisson";
  }
  return "unknown";
}

LinkFamily parse_link_family(std::string_view name) {
  if (name == "linear") return LinkFamily::linear;
  if (name == "logistic") return LinkFamily::logistic;
  if (name == "poisson") return LinkFamily::poisson;
  throw UsageError("unknown outcome model '" + std::string(name) + "' (expected linear|logistic|poisson)");
}

LinkValue link_eval(LinkFamily family, double a) {
  switch (family) {
    case LinkFamily::linear:
      return {a, 1.0};
    case LinkFamily::logistic: {
      // Branch on the sign so exp never sees a large positive argument.
      const double t = std::exp(-std::abs(a));
      const double g = a >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
      const double g_dot = t / ((1.0 + t) * (1.0 + t));
      return {g, g_dot};
    }
    case LinkFamily::poisson: {
      if (a > kMaxExpArgument) {
        std::ostringstream msg;
        msg << "poisson link overflow at linear predictor " << a;
        throw OverflowError(msg.str());
      }
      const double e = std::exp(a);
      return {e, e};
    }
  }
  return {0.0, 0.0};
}

Eigen::VectorXd link_mean(LinkFamily family, const Eigen::VectorXd& eta) {
  Eigen::VectorXd out(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) out(i) = link_eval(family, eta(i)).g;
  return out;
}

Eigen::VectorXd link_derivative(LinkFamily family, const Eigen::VectorXd& eta) {
  Eigen::VectorXd out(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) out(i) = link_eval(family, eta(i)).g_dot;
  return out;
}

VarianceModel estimate_theta(LinkFamily family, const TwoSampleData& data,
                             const Eigen::VectorXd& alpha_hat) {
  if (alpha_hat.size() != data.d()) throw UsageError("alpha_hat has the wrong length");
  VarianceModel model;
  model.family = family;
  model.alpha = alpha_hat;
  if (family == LinkFamily::linear) {
    const Eigen::VectorXd resid = data.source_y - data.source_x * alpha_hat;
    model.sigma2 = kernels::mean(resid.array().square().matrix());
    if (!(model.sigma2 > 0.0) || !std::isfinite(model.sigma2)) {
      throw SolverError("degenerate working variance: source residuals are all zero");
    }
  }
  return model;
}

double variance_eval(const VarianceModel& model, const Eigen::VectorXd& x) {
  double v = 0.0;
  if (model.family == LinkFamily::linear) {
    v = model.sigma2;
  } else {
    v = link_eval(model.family, x.dot(model.alpha)).g_dot;
  }
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "working variance evaluated to " << v << " (must be positive and finite)";
    throw SolverError(msg.str());
  }
  return v;
}

Eigen::VectorXd variance_eval_rows(const VarianceModel& model, const Eigen::MatrixXd& rows) {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out(i) = variance_eval(model, rows.row(i).transpose());
  return out;
}

}  // namespace padr
