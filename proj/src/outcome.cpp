#include "padr/outcome.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "padr/errors.hpp"
#include "padr/kernels.hpp"

namespace padr {

namespace {

constexpr double kMinStep = 1e-10;
constexpr double kSeparationNorm = 1e3;
constexpr double kMinRcond = 1e-14;
constexpr double kSufficientDecrease = 1e-4;

void check_outcome_range(const TwoSampleData& data, LinkFamily family) {
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double y = data.source_y(i);
    if (family == LinkFamily::logistic && y != 0.0 && y != 1.0) {
      throw ValidationError("logistic outcome model requires 0/1 outcomes (source row " + std::to_string(i + 1) + ")");
    }
    if (family == LinkFamily::poisson && y < 0.0) {
      throw ValidationError("poisson outcome model requires non-negative outcomes (source row " + std::to_string(i + 1) + ")");
    }
  }
}

struct State {
  Eigen::VectorXd mean;
  Eigen::VectorXd deriv;
  Eigen::VectorXd score;
};

// std::nullopt when the link overflows at this alpha.
std::optional<State> evaluate(const TwoSampleData& data, LinkFamily family, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd eta = data.source_x * alpha;
  State s;
  s.mean.resize(eta.size());
  s.deriv.resize(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (!std::isfinite(eta(i))) return std::nullopt;
    if (family == LinkFamily::poisson && eta(i) > kMaxExpArgument) return std::nullopt;
    const LinkValue lv = link_eval(family, eta(i));
    s.mean(i) = lv.g;
    s.deriv(i) = lv.g_dot;
  }
  s.score = kernels::weighted_mean(data.source_x, data.source_y - s.mean);
  return s;
}

}  // namespace

Eigen::VectorXd outcome_score(const TwoSampleData& data, LinkFamily family, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd g = link_mean(family, data.source_x * alpha);
  return kernels::weighted_mean(data.source_x, data.source_y - g);
}

OutcomeFit fit_outcome(const TwoSampleData& data, LinkFamily family, const SolverOptions& options) {
  check_outcome_range(data, family);
  OutcomeFit fit;
  fit.family = family;
  fit.alpha_hat = Eigen::VectorXd::Zero(data.d());
  State cur = *evaluate(data, family, fit.alpha_hat);

  for (int iter = 0;; ++iter) {
    fit.score_norm = cur.score.lpNorm<Eigen::Infinity>();
    fit.iterations = iter;
    if (fit.score_norm <= options.tol) break;
    if (iter >= options.max_iter) {
      std::ostringstream msg;
      msg << "outcome regression did not converge in " << options.max_iter << " iterations (score residual "
          << fit.score_norm << ")";
      throw ConvergenceError(msg.str(), fit.score_norm);
    }

    const Eigen::MatrixXd hess = kernels::weighted_gram(data.source_x, cur.deriv);
    const Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success || llt.rcond() < kMinRcond) {
      if (iter == 0) throw SingularMatrixError("outcome regression: source design matrix is rank deficient");
      throw ConvergenceError("outcome regression: information matrix became singular (possible separation)",
                             fit.score_norm);
    }
    const Eigen::VectorXd step = llt.solve(cur.score);

    const double norm0 = cur.score.norm();
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd alpha_try;
    std::optional<State> trial;
    while (t >= kMinStep) {
      alpha_try = fit.alpha_hat + t * step;
      trial = evaluate(data, family, alpha_try);
      if (trial && trial->score.norm() <= (1.0 - kSufficientDecrease * t) * norm0) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "outcome regression line search failed (score residual " << fit.score_norm << ")";
      throw ConvergenceError(msg.str(), fit.score_norm);
    }
    fit.alpha_hat = alpha_try;
    cur = std::move(*trial);
    if (family == LinkFamily::logistic && fit.alpha_hat.lpNorm<Eigen::Infinity>() > kSeparationNorm &&
        cur.score.lpNorm<Eigen::Infinity>() > options.tol) {
      throw ConvergenceError("outcome regression: logistic separation (coefficients exceed 1e3)",
                             cur.score.lpNorm<Eigen::Infinity>());
    }
  }
  // Under complete separation Newton reaches the score tolerance with every
  // fitted probability collapsed onto its label; no finite MLE exists.
  if (family == LinkFamily::logistic && (data.source_y - cur.mean).lpNorm<Eigen::Infinity>() < 1e-6) {
    throw ConvergenceError("outcome regression: logistic separation (every fitted probability equals its label)",
                           fit.score_norm);
  }
  fit.fitted_source = cur.mean;
  fit.fitted_target = link_mean(family, data.target_x * fit.alpha_hat);
  return fit;
}

}  // namespace padr
