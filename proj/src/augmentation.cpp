#include "padr/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "padr/errors.hpp"
#include "padr/kernels.hpp"

namespace padr {

namespace {

// Relative eigenvalue floor below which Sigma counts as singular.
constexpr double kSingularRatio = 1e-13;

Eigen::MatrixXd scale_rows(const Eigen::MatrixXd& m, const Eigen::VectorXd& w) { return w.asDiagonal() * m; }

Eigen::MatrixXd center(const Eigen::MatrixXd& m) {
  const Eigen::RowVectorXd mu = kernels::column_mean(m).transpose();
  return m.rowwise() - mu;
}

Eigen::VectorXd center(const Eigen::VectorXd& v) {
  return (v.array() - kernels::mean(v)).matrix();
}

// Divisor-n covariance between the columns of a and b.
Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return kernels::weighted_cross(center(a), center(b), Eigen::VectorXd::Ones(a.rows()));
}

std::string describe_singular(const Eigen::MatrixXd& s, const std::vector<std::string>& names) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const Eigen::VectorXd u = es.eigenvectors().col(0);
  const double umax = u.cwiseAbs().maxCoeff();
  std::ostringstream os;
  os << "smallest eigenvalue " << ev(0) << " vs largest " << ev(ev.size() - 1) << "; offending basis columns:";
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    if (std::abs(u(k)) >= 0.1 * umax) {
      os << ' ' << (static_cast<std::size_t>(k) < names.size() ? names[static_cast<std::size_t>(k)] : "#" + std::to_string(k));
    }
  }
  return os.str();
}

bool near_singular(const Eigen::MatrixXd& s) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(es.eigenvalues().size() - 1);
  return !(hi > 0.0) || !(lo > kSingularRatio * hi);
}

Eigen::VectorXd source_eta_derivative(const TwoSampleData& data, const OutcomeFit& outcome) {
  return link_derivative(outcome.family, data.source_x * outcome.alpha_hat);
}

}  // namespace

CalibratedBasis calibrate_pad(const RawBasis& phi, const VarianceModel& variance, const TwoSampleData& data) {
  const Eigen::VectorXd v_target = variance_eval_rows(variance, data.target_x);
  const double denom = kernels::mean(v_target);
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw SolverError("PAD calibration: target mean of the working variance is not positive");
  }
  CalibratedBasis out;
  out.flavor = BasisFlavor::pad;
  out.shift = kernels::weighted_mean(phi.target, v_target) / denom;
  out.psi_source = phi.source.rowwise() - out.shift.transpose();
  out.psi_target = phi.target.rowwise() - out.shift.transpose();
  out.names = phi.names;
  out.warnings = phi.warnings;
  return out;
}

CalibratedBasis calibrate_oad(const RawBasis& phi, const OutcomeFit& outcome, const TwoSampleData&) {
  const double g_bar = kernels::mean(outcome.fitted_target);
  CalibratedBasis out;
  out.flavor = BasisFlavor::oad;
  out.g_tilde_target = (outcome.fitted_target.array() - g_bar).matrix();
  out.g_tilde_source = (outcome.fitted_source.array() - g_bar).matrix();
  const double denom = kernels::mean(out.g_tilde_target.array().square().matrix());
  const double scale = std::max(1.0, kernels::mean(outcome.fitted_target.array().square().matrix()));
  if (!(denom > 1e-14 * scale)) {
    throw SolverError("OAD calibration: fitted outcome values are constant on the target sample");
  }
  out.shift = kernels::weighted_mean(phi.target, out.g_tilde_target) / denom;
  out.psi_target = phi.target - out.g_tilde_target * out.shift.transpose();
  out.psi_source = phi.source - out.g_tilde_source * out.shift.transpose();
  out.names = phi.names;
  out.warnings = phi.warnings;
  return out;
}

Eigen::VectorXd compute_L_hat(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome) {
  const Eigen::VectorXd gd_source = source_eta_derivative(data, outcome);
  const Eigen::VectorXd gd_target = link_derivative(outcome.family, data.target_x * outcome.alpha_hat);
  const Eigen::MatrixXd h = kernels::weighted_gram(data.source_x, gd_source);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || near_singular(h)) {
    throw SingularMatrixError("L-hat: outcome information matrix H is singular");
  }
  const Eigen::VectorXd gap = kernels::weighted_mean(data.source_x, gd_source.cwiseProduct(propensity.weights_source)) -
                              kernels::weighted_mean(data.target_x, gd_target);
  return -ldlt.solve(gap);
}

Eigen::VectorXd compute_L_star(const TwoSampleData& data, const PropensityFit& propensity, const OutcomeFit& outcome) {
  const Eigen::VectorXd& e = propensity.weights_source;
  const Eigen::MatrixXd m = kernels::weighted_gram(data.source_x, e);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || near_singular(m)) {
    throw SingularMatrixError("L*: weighted source design matrix is singular");
  }
  const Eigen::VectorXd resid = data.source_y - outcome.fitted_source;
  return ldlt.solve(kernels::weighted_mean(data.source_x, resid.cwiseProduct(e)));
}

PadProblem assemble_pad_problem(const CalibratedBasis& basis, const VarianceModel& variance,
                                const PropensityFit& propensity, const OutcomeFit& outcome,
                                const TwoSampleData& data) {
  const Eigen::VectorXd v = variance_eval_rows(variance, data.source_x);
  const Eigen::VectorXd gd = source_eta_derivative(data, outcome);
  PadProblem pr;
  pr.l_hat = compute_L_hat(data, propensity, outcome);
  pr.a = kernels::weighted_cross(basis.psi_source, data.source_x, gd);
  pr.b = kernels::weighted_mean(basis.psi_source, propensity.weights_source.cwiseProduct(v)) +
         kernels::weighted_cross(basis.psi_source, data.source_x, v) * pr.l_hat;
  pr.sigma = kernels::weighted_gram(basis.psi_source, v);
  return pr;
}

double pad_objective(const CalibratedBasis& basis, const VarianceModel& variance, const PropensityFit& propensity,
                     const Eigen::VectorXd& l_hat, const TwoSampleData& data, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd v = variance_eval_rows(variance, data.source_x);
  const Eigen::VectorXd aug = propensity.weights_source + basis.psi_source * beta;
  const double quad = kernels::mean(aug.array().square().matrix().cwiseProduct(v));
  const double lin = l_hat.dot(kernels::weighted_mean(data.source_x, aug.cwiseProduct(v)));
  return quad + 2.0 * lin;
}

RwlsSolution solve_rwls_closed_form(const PadProblem& problem, double ridge, const std::vector<std::string>& names) {
  const Eigen::Index p = problem.sigma.rows();
  Eigen::MatrixXd s = problem.sigma;
  if (ridge > 0.0) s += ridge * Eigen::MatrixXd::Identity(p, p);
  const Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success || near_singular(s)) {
    throw SingularMatrixError("RWLS: Sigma is singular (" + describe_singular(s, names) +
                              "); drop a column or pass a ridge");
  }
  const Eigen::MatrixXd s_inv_a = llt.solve(problem.a);
  const Eigen::VectorXd s_inv_b = llt.solve(problem.b);
  const Eigen::MatrixXd m = problem.a.transpose() * s_inv_a;
  const Eigen::LDLT<Eigen::MatrixXd> m_ldlt(m);
  if (m_ldlt.info() != Eigen::Success || !m_ldlt.isPositive() || near_singular(m)) {
    throw SingularMatrixError("RWLS: constraint matrix a' Sigma^-1 a is singular (degenerate constraints)");
  }
  const Eigen::VectorXd proj = m_ldlt.solve(problem.a.transpose() * s_inv_b);
  RwlsSolution sol;
  sol.beta_hat = s_inv_a * proj - s_inv_b;
  sol.lagrange_multiplier = -proj;
  sol.constraint_residual = (problem.a.transpose() * sol.beta_hat).lpNorm<Eigen::Infinity>();
  return sol;
}

RwlsSolution solve_rwls_pad(const CalibratedBasis& basis, const VarianceModel& variance,
                            const PropensityFit& propensity, const OutcomeFit& outcome, const TwoSampleData& data,
                            double ridge) {
  const PadProblem pr = assemble_pad_problem(basis, variance, propensity, outcome, data);
  RwlsSolution sol = solve_rwls_closed_form(pr, ridge, basis.names);
  sol.objective_at_beta = pad_objective(basis, variance, propensity, pr.l_hat, data, sol.beta_hat);
  sol.objective_at_zero = pad_objective(basis, variance, propensity, pr.l_hat, data, Eigen::VectorXd::Zero(basis.dim()));
  return sol;
}

OadProblem assemble_oad_problem(const CalibratedBasis& basis, const PropensityFit& propensity,
                                const OutcomeFit& outcome, const TwoSampleData& data) {
  const Eigen::VectorXd& e = propensity.weights_source;
  const double inv_n = 1.0 / static_cast<double>(data.n());
  const double inv_N = 1.0 / static_cast<double>(data.N());

  const Eigen::MatrixXd u = scale_rows(basis.psi_source, e);
  const Eigen::MatrixXd xe = scale_rows(data.source_x, e);
  const Eigen::VectorXd w = (data.source_y - outcome.fitted_source).cwiseProduct(e);
  const Eigen::VectorXd& g_t = outcome.fitted_target;

  OadProblem pr;
  pr.l_star = compute_L_star(data, propensity, outcome);
  pr.q = inv_n * sample_cov(u, u) + inv_N * sample_cov(basis.psi_target, basis.psi_target);
  pr.q.triangularView<Eigen::StrictlyUpper>() = pr.q.transpose();
  pr.l = inv_n * (-sample_cov(u, w) + sample_cov(u, xe) * pr.l_star) +
         inv_N * (sample_cov(basis.psi_target, g_t) + sample_cov(basis.psi_target, data.target_x) * pr.l_star);
  pr.c = kernels::weighted_cross(data.source_x, basis.psi_source, e);
  pr.constant = inv_n * kernels::mean(center(w).array().square().matrix()) +
                inv_N * kernels::mean(center(Eigen::VectorXd(g_t)).array().square().matrix());
  return pr;
}

double oad_objective(const CalibratedBasis& basis, const PropensityFit& propensity, const OutcomeFit& outcome,
                     const Eigen::VectorXd& l_star, const TwoSampleData& data, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd& e = propensity.weights_source;
  const double inv_n = 1.0 / static_cast<double>(data.n());
  const double inv_N = 1.0 / static_cast<double>(data.N());
  const Eigen::VectorXd s_src = basis.psi_source * beta;
  const Eigen::VectorXd s_tgt = basis.psi_target * beta;

  const Eigen::VectorXd src_term = (data.source_y - outcome.fitted_source - s_src).cwiseProduct(e);
  const Eigen::VectorXd tgt_term = outcome.fitted_target + s_tgt;
  const double var_s = kernels::mean(center(src_term).array().square().matrix());
  const double var_t = kernels::mean(center(tgt_term).array().square().matrix());

  const Eigen::VectorXd cov_t = sample_cov(data.target_x, s_tgt);
  const Eigen::VectorXd cov_s = sample_cov(scale_rows(data.source_x, e), Eigen::VectorXd(s_src.cwiseProduct(e)));
  return inv_n * var_s + inv_N * var_t + 2.0 * l_star.dot(inv_N * cov_t + inv_n * cov_s);
}

RwlsSolution solve_equality_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& l, const Eigen::MatrixXd& c) {
  const Eigen::Index p = q.rows();
  const Eigen::Index d = c.rows();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(p + d, p + d);
  kkt.topLeftCorner(p, p) = q;
  kkt.topRightCorner(p, d) = c.transpose();
  kkt.bottomLeftCorner(d, p) = c;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + d);
  rhs.head(p) = -l;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) {
    throw SingularMatrixError("RWLS: KKT matrix is singular (rank " + std::to_string(lu.rank()) + " of " +
                              std::to_string(p + d) + ")");
  }
  Eigen::VectorXd sol = lu.solve(rhs);
  // One step of iterative refinement.
  sol += lu.solve(rhs - kkt * sol);
  RwlsSolution out;
  out.beta_hat = sol.head(p);
  out.lagrange_multiplier = sol.tail(d);
  out.constraint_residual = (c * out.beta_hat).lpNorm<Eigen::Infinity>();
  return out;
}

RwlsSolution solve_rwls_oad(const CalibratedBasis& basis, const PropensityFit& propensity, const OutcomeFit& outcome,
                            const TwoSampleData& data) {
  const OadProblem pr = assemble_oad_problem(basis, propensity, outcome, data);
  RwlsSolution sol = solve_equality_qp(pr.q, pr.l, pr.c);
  sol.objective_at_beta = oad_objective(basis, propensity, outcome, pr.l_star, data, sol.beta_hat);
  sol.objective_at_zero = oad_objective(basis, propensity, outcome, pr.l_star, data, Eigen::VectorXd::Zero(basis.dim()));
  return sol;
}

}  // namespace padr
