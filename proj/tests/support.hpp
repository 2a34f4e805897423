#pragma once

// Test-only helpers: random instance generators and oracles that recompute
// library quantities by independent routes (long double loops, null-space
// elimination, polarization of a black-box quadratic, quadrature).

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "padr/augmentation.hpp"
#include "padr/data.hpp"
#include "padr/estimators.hpp"

namespace padr::testing {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline long double expit_l(long double a) { return 1.0L / (1.0L + std::exp(-a)); }

/// Source X ~ N(0, 1) per raw column, target shifted by `shift`; outcome from
/// the family with a mildly nonlinear mean so residuals are non-trivial.
inline TwoSampleData random_data(std::uint64_t seed, int n, int N, int raw_dim, LinkFamily family,
                                 double shift = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd xs(n, raw_dim), xt(N, raw_dim);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    double eta = 0.2;
    for (int j = 0; j < raw_dim; ++j) {
      xs(i, j) = z(rng);
      eta += (j % 2 ? -0.5 : 0.7) * xs(i, j) + 0.2 * std::sin(xs(i, j));
    }
    switch (family) {
      case LinkFamily::linear: y(i) = eta + z(rng); break;
      case LinkFamily::logistic: y(i) = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0; break;
      case LinkFamily::poisson: {
        std::poisson_distribution<int> pois(std::exp(0.3 * eta));
        y(i) = pois(rng);
        break;
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < raw_dim; ++j) xt(i, j) = z(rng) + shift;
  }
  return make_two_sample(xs, y, xt, true);
}

/// min beta'Q beta + 2 l'beta  s.t. C beta = 0, by an orthonormal basis Z of
/// ker C (full SVD) and an unconstrained solve in reduced coordinates.
inline Eigen::VectorXd null_space_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& l, const Eigen::MatrixXd& c) {
  const LMatrix cl = c.cast<long double>();
  Eigen::JacobiSVD<LMatrix> svd(cl, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > 1e-14L * sv(0)) ++rank;
  }
  const Eigen::Index p = c.cols();
  const LMatrix z = svd.matrixV().rightCols(p - rank);
  const LMatrix qz = z.transpose() * q.cast<long double>() * z;
  const LVector lz = z.transpose() * l.cast<long double>();
  const LVector t = qz.colPivHouseholderQr().solve(-lz);
  return (z * t).cast<double>();
}

struct BruteForcePad {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd sigma;
  Eigen::VectorXd l_hat;
};

/// Sigma, a, b and L-hat assembled sample by sample in long double, with v and
/// g' recomputed from alpha-hat here rather than taken from the library.
inline BruteForcePad brute_force_pad(const TwoSampleData& data, const NuisanceFits& fits, const Eigen::MatrixXd& psi) {
  const Eigen::Index n = data.n(), N = data.N(), d = data.d(), p = psi.cols();
  const LinkFamily fam = fits.outcome.family;
  const auto gdot = [&](const Eigen::VectorXd& x) -> long double {
    const long double eta = x.cast<long double>().dot(fits.outcome.alpha_hat.cast<long double>());
    if (fam == LinkFamily::linear) return 1.0L;
    if (fam == LinkFamily::logistic) return expit_l(eta) * (1.0L - expit_l(eta));
    return std::exp(eta);
  };
  long double sigma2 = 0.0L;
  if (fam == LinkFamily::linear) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const long double r = data.source_y(i) - data.source_x.row(i).cast<long double>().dot(
                                                   fits.outcome.alpha_hat.cast<long double>());
      sigma2 += r * r;
    }
    sigma2 /= n;
  }
  const auto v = [&](const Eigen::VectorXd& x) { return fam == LinkFamily::linear ? sigma2 : gdot(x); };

  LMatrix h = LMatrix::Zero(d, d);
  LVector brace = LVector::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = data.source_x.row(i).transpose();
    const long double gd = gdot(x);
    const long double e = std::exp(x.cast<long double>().dot(fits.propensity.gamma_hat.cast<long double>()));
    h += x.cast<long double>() * x.cast<long double>().transpose() * gd / static_cast<long double>(n);
    brace += x.cast<long double>() * gd * e / static_cast<long double>(n);
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    const Eigen::VectorXd x = data.target_x.row(i).transpose();
    brace -= x.cast<long double>() * gdot(x) / static_cast<long double>(N);
  }
  const LVector l_hat = -h.fullPivLu().solve(brace);

  LMatrix a = LMatrix::Zero(p, d), sig = LMatrix::Zero(p, p);
  LVector b = LVector::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = data.source_x.row(i).transpose();
    const LVector xl = x.cast<long double>();
    const LVector ps = psi.row(i).transpose().cast<long double>();
    const long double e = std::exp(xl.dot(fits.propensity.gamma_hat.cast<long double>()));
    const long double vi = v(x);
    a += ps * xl.transpose() * gdot(x) / static_cast<long double>(n);
    b += ps * (e * vi + xl.dot(l_hat) * vi) / static_cast<long double>(n);
    sig += ps * ps.transpose() * vi / static_cast<long double>(n);
  }
  return {a.cast<double>(), b.cast<double>(), sig.cast<double>(), l_hat.cast<double>()};
}

/// PAD objective from the raw definition, long double.
inline long double pad_objective_l(const TwoSampleData& data, const NuisanceFits& fits, const Eigen::MatrixXd& psi,
                                   const BruteForcePad& bf, const Eigen::VectorXd& beta) {
  const LinkFamily fam = fits.outcome.family;
  long double sigma2 = 0.0L;
  if (fam == LinkFamily::linear) {
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const long double r = data.source_y(i) - data.source_x.row(i).cast<long double>().dot(
                                                   fits.outcome.alpha_hat.cast<long double>());
      sigma2 += r * r;
    }
    sigma2 /= data.n();
  }
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const LVector x = data.source_x.row(i).transpose().cast<long double>();
    const long double eta = x.dot(fits.outcome.alpha_hat.cast<long double>());
    const long double vi = fam == LinkFamily::linear     ? sigma2
                           : fam == LinkFamily::logistic ? expit_l(eta) * (1.0L - expit_l(eta))
                                                         : std::exp(eta);
    const long double w = std::exp(x.dot(fits.propensity.gamma_hat.cast<long double>())) +
                          psi.row(i).cast<long double>().dot(beta.cast<long double>());
    total += w * w * vi + 2.0L * bf.l_hat.cast<long double>().dot(x) * w * vi;
  }
  return total / data.n();
}

/// OAD objective written straight from its definition (divisor-n sample
/// variances and covariances), long double.
inline long double oad_objective_l(const TwoSampleData& data, const NuisanceFits& fits, const CalibratedBasis& basis,
                                   const Eigen::VectorXd& l_star, const Eigen::VectorXd& beta) {
  const Eigen::Index n = data.n(), N = data.N(), d = data.d();
  const auto var = [](const std::vector<long double>& v) {
    long double m = 0.0L;
    for (auto x : v) m += x;
    m /= v.size();
    long double s = 0.0L;
    for (auto x : v) s += (x - m) * (x - m);
    return s / v.size();
  };
  const auto cov = [](const std::vector<long double>& a, const std::vector<long double>& b) {
    long double ma = 0.0L, mb = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ma += a[i];
      mb += b[i];
    }
    ma /= a.size();
    mb /= b.size();
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / a.size();
  };
  std::vector<long double> src_term(n), src_aug(n), tgt_term(N), tgt_aug(N);
  std::vector<std::vector<long double>> src_xe(d, std::vector<long double>(n)), tgt_x(d, std::vector<long double>(N));
  for (Eigen::Index i = 0; i < n; ++i) {
    const LVector x = data.source_x.row(i).transpose().cast<long double>();
    const long double e = std::exp(x.dot(fits.propensity.gamma_hat.cast<long double>()));
    const long double aug = basis.psi_source.row(i).cast<long double>().dot(beta.cast<long double>());
    src_term[i] = (data.source_y(i) - static_cast<long double>(fits.outcome.fitted_source(i)) - aug) * e;
    src_aug[i] = aug * e;
    for (Eigen::Index k = 0; k < d; ++k) src_xe[k][i] = x(k) * e;
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    const long double aug = basis.psi_target.row(i).cast<long double>().dot(beta.cast<long double>());
    tgt_term[i] = static_cast<long double>(fits.outcome.fitted_target(i)) + aug;
    tgt_aug[i] = aug;
    for (Eigen::Index k = 0; k < d; ++k) tgt_x[k][i] = data.target_x(i, k);
  }
  long double v = var(src_term) / n + var(tgt_term) / N;
  for (Eigen::Index k = 0; k < d; ++k) {
    v += 2.0L * l_star(k) * (cov(tgt_x[k], tgt_aug) / N + cov(src_xe[k], src_aug) / n);
  }
  return v;
}

/// Recovers (Q, l, constant) of an exact quadratic f(beta) = beta'Q beta + 2 l'beta + c
/// by polarization at the unit vectors.
struct Quadratic {
  Eigen::MatrixXd q;
  Eigen::VectorXd l;
  long double constant;
};

inline Quadratic polarize(const std::function<long double(const Eigen::VectorXd&)>& f, Eigen::Index p) {
  Quadratic out{Eigen::MatrixXd(p, p), Eigen::VectorXd(p), f(Eigen::VectorXd::Zero(p))};
  std::vector<long double> fp(p), fm(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::VectorXd ei = Eigen::VectorXd::Unit(p, i);
    fp[i] = f(ei);
    fm[i] = f(-ei);
    out.l(i) = static_cast<double>((fp[i] - fm[i]) / 4.0L);
    out.q(i, i) = static_cast<double>((fp[i] + fm[i]) / 2.0L - out.constant);
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const long double fij = f(Eigen::VectorXd::Unit(p, i) + Eigen::VectorXd::Unit(p, j));
      const long double ei = (fp[i] - fm[i]) / 2.0L, ej = (fp[j] - fm[j]) / 2.0L;
      // f(ei+ej) = Qii + Qjj + 2Qij + 2(li + lj) + c
      const long double qij = (fij - out.q(i, i) - out.q(j, j) - ei - ej - out.constant) / 2.0L;
      out.q(i, j) = out.q(j, i) = static_cast<double>(qij);
    }
  }
  return out;
}

/// Constraint matrix of the OAD problem, mean_S X Psi' e, by loops.
inline Eigen::MatrixXd oad_constraint_l(const TwoSampleData& data, const NuisanceFits& fits,
                                        const CalibratedBasis& basis) {
  LMatrix c = LMatrix::Zero(data.d(), basis.dim());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const LVector x = data.source_x.row(i).transpose().cast<long double>();
    const long double e = std::exp(x.dot(fits.propensity.gamma_hat.cast<long double>()));
    c += x * basis.psi_source.row(i).cast<long double>() * e / static_cast<long double>(data.n());
  }
  return c.cast<double>();
}

/// E f(Z), Z ~ N(0, 1), by Gauss-Hermite quadrature with `nodes` points
/// (Golub-Welsch on the physicists' Hermite recurrence).
inline double gauss_hermite_normal(const std::function<double(double)>& f, int nodes = 80) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  double total = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const double t = es.eigenvalues()(k);
    const double w = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);  // weights sum to 1
    total += w * f(std::sqrt(2.0) * t);
  }
  return total;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({1e-300, a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>()});
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace padr::testing
