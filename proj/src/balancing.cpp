#include "padr/balancing.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "padr/errors.hpp"
#include "padr/kernels.hpp"

namespace padr {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-12;
constexpr double kMaxLinearPredictor = 700.0;
constexpr double kMaxCoefficient = 1e3;
constexpr double kMinRcond = 1e-14;

struct Evaluation {
  Eigen::VectorXd weights;
  double potential = std::numeric_limits<double>::infinity();
  bool overflow = false;
};

Evaluation evaluate(const TwoSampleData& data, const Eigen::VectorXd& target_mean,
                    const Eigen::VectorXd& gamma) {
  Evaluation ev;
  const Eigen::VectorXd eta = data.source_x * gamma;
  if (!eta.allFinite() || eta.maxCoeff() > kMaxLinearPredictor) {
    ev.overflow = true;
    return ev;
  }
  ev.weights = eta.array().exp().matrix();
  ev.potential = kernels::mean(ev.weights) - gamma.dot(target_mean);
  return ev;
}

}  // namespace

double balancing_potential(const TwoSampleData& data, const Eigen::VectorXd& gamma) {
  return evaluate(data, kernels::column_mean(data.target_x), gamma).potential;
}

Eigen::VectorXd balance_residual(const TwoSampleData& data, const Eigen::VectorXd& gamma) {
  const Eigen::VectorXd w = (data.source_x * gamma).array().exp().matrix();
  return kernels::weighted_mean(data.source_x, w) - kernels::column_mean(data.target_x);
}

PropensityFit fit_propensity(const TwoSampleData& data, const SolverOptions& options) {
  const Eigen::Index d = data.d();
  const Eigen::VectorXd target_mean = kernels::column_mean(data.target_x);

  PropensityFit fit;
  fit.gamma_hat = Eigen::VectorXd::Zero(d);
  Evaluation cur = evaluate(data, target_mean, fit.gamma_hat);

  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd grad = kernels::weighted_mean(data.source_x, cur.weights) - target_mean;
    fit.objective_trace.push_back(cur.potential);
    fit.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    fit.iterations = iter;
    if (fit.gradient_norm <= options.tol) break;
    if (iter >= options.max_iter) {
      std::ostringstream msg;
      msg << "propensity balancing did not converge in " << options.max_iter
          << " iterations (balance residual " << fit.gradient_norm << ")";
      throw ConvergenceError(msg.str(), fit.gradient_norm);
    }

    const Eigen::MatrixXd hess = kernels::weighted_gram(data.source_x, cur.weights);
    const Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success || llt.rcond() < kMinRcond) {
      if (iter == 0) throw SingularMatrixError("propensity balancing: source design matrix is rank deficient");
      throw DivergenceError("propensity balancing: weights collapsed; the balancing equations have no finite solution",
                            fit.gradient_norm);
    }
    const Eigen::VectorXd step = -llt.solve(grad);
    const double slope = grad.dot(step);

    double t = 1.0;
    bool overflow_seen = false;
    bool accepted = false;
    Evaluation trial;
    Eigen::VectorXd gamma_try;
    while (t >= kMinStep) {
      gamma_try = fit.gamma_hat + t * step;
      trial = evaluate(data, target_mean, gamma_try);
      if (trial.overflow) {
        overflow_seen = true;
      } else if (std::isfinite(trial.potential)) {
        if (trial.potential <= cur.potential + kArmijo * t * slope) {
          accepted = true;
          break;
        }
        // Near the optimum F changes below rounding; accept a step that does
        // not raise F beyond rounding and still shrinks the residual.
        const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(cur.potential));
        if (trial.potential <= cur.potential + slack) {
          const Eigen::VectorXd g_try = kernels::weighted_mean(data.source_x, trial.weights) - target_mean;
          if (g_try.lpNorm<Eigen::Infinity>() < fit.gradient_norm) {
            accepted = true;
            break;
          }
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (overflow_seen) {
        throw DivergenceError("propensity balancing diverged: exp overflow along the Newton direction",
                              fit.gradient_norm);
      }
      std::ostringstream msg;
      msg << "propensity balancing line search failed (balance residual " << fit.gradient_norm << ")";
      throw ConvergenceError(msg.str(), fit.gradient_norm);
    }
    fit.gamma_hat = gamma_try;
    cur = std::move(trial);
    if (fit.gamma_hat.lpNorm<Eigen::Infinity>() > kMaxCoefficient) {
      throw DivergenceError("propensity balancing diverged: coefficients exceed 1e3", fit.gradient_norm);
    }
  }
  fit.weights_source = cur.weights;
  return fit;
}

}  // namespace padr
