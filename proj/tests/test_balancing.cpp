#include <cmath>

#include "doctest.h"
#include "padr/balancing.hpp"
#include "padr/errors.hpp"
#include "support.hpp"

using namespace padr;

namespace {

TwoSampleData one_covariate(std::vector<double> xs, std::vector<double> xt) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(xs.size()), 1), t(static_cast<Eigen::Index>(xt.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) s(static_cast<Eigen::Index>(i), 0) = xs[i];
  for (std::size_t i = 0; i < xt.size(); ++i) t(static_cast<Eigen::Index>(i), 0) = xt[i];
  return make_two_sample(s, Eigen::VectorXd::Ones(s.rows()), t, true);
}

// Bisection on the slope after profiling out the intercept:
// sum x e^{g x} / sum e^{g x} = target mean, then g0 = -log mean e^{g x}.
Eigen::Vector2d bisection_oracle(const std::vector<double>& xs, double target_mean) {
  const auto ratio = [&](double g) {
    long double num = 0, den = 0;
    for (double x : xs) {
      num += x * std::exp(static_cast<long double>(g) * x);
      den += std::exp(static_cast<long double>(g) * x);
    }
    return static_cast<double>(num / den) - target_mean;
  };
  double lo = -50.0, hi = 50.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) < 0.0 ? lo : hi) = mid;
  }
  const double g1 = 0.5 * (lo + hi);
  long double m = 0;
  for (double x : xs) m += std::exp(static_cast<long double>(g1) * x);
  return {static_cast<double>(-std::log(m / xs.size())), g1};
}

}  // namespace

TEST_SUITE("balancing") {
  TEST_CASE("intercept only gives gamma = 0") {
    const TwoSampleData d = make_two_sample(Eigen::MatrixXd(3, 0), Eigen::VectorXd::Ones(3), Eigen::MatrixXd(2, 0), true);
    const PropensityFit f = fit_propensity(d);
    CHECK(f.gamma_hat.size() == 1);
    CHECK(f.gamma_hat(0) == 0.0);
  }

  TEST_CASE("identical means give gamma = 0") {
    const PropensityFit f = fit_propensity(one_covariate({-1.0, 0.0, 1.0}, {0.5, -0.5}));
    CHECK(f.gamma_hat.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(f.iterations == 0);
  }

  TEST_CASE("two-point design matches the bisection oracle") {
    const std::vector<double> xs{-1.0, 1.0, -1.0, 1.0};
    const PropensityFit f = fit_propensity(one_covariate(xs, {0.25, 0.75}));
    const Eigen::Vector2d oracle = bisection_oracle(xs, 0.5);
    CHECK(f.gamma_hat(0) == doctest::Approx(oracle(0)).epsilon(1e-8));
    CHECK(f.gamma_hat(1) == doctest::Approx(oracle(1)).epsilon(1e-8));
    CHECK(f.gamma_hat(1) == doctest::Approx(std::atanh(0.5)).epsilon(1e-8));
  }

  TEST_CASE("uneven design matches the bisection oracle") {
    const std::vector<double> xs{-2.0, -0.3, 0.1, 0.4, 1.7, 2.2, -1.1};
    const PropensityFit f = fit_propensity(one_covariate(xs, {1.1, 0.3, 0.9}));
    const Eigen::Vector2d oracle = bisection_oracle(xs, (1.1 + 0.3 + 0.9) / 3.0);
    CHECK(std::abs(f.gamma_hat(0) - oracle(0)) <= 1e-8);
    CHECK(std::abs(f.gamma_hat(1) - oracle(1)) <= 1e-8);
  }

  TEST_CASE("balance residual, unit mean weights and monotone potential") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const TwoSampleData d = testing::random_data(seed, 150, 90, 3, LinkFamily::linear, 0.4);
      const PropensityFit f = fit_propensity(d);
      const Eigen::VectorXd r = balance_residual(d, f.gamma_hat);
      CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-9);
      CHECK(f.gradient_norm <= 1e-9);
      CHECK(f.weights_source.mean() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK((f.weights_source.array() > 0.0).all());
      for (std::size_t k = 1; k < f.objective_trace.size(); ++k) {
        const double prev = f.objective_trace[k - 1];
        CHECK(f.objective_trace[k] <= prev + 1e-13 * std::max(1.0, std::abs(prev)));
      }
      CHECK(balancing_potential(d, f.gamma_hat) <= balancing_potential(d, Eigen::VectorXd::Zero(d.d())));
    }
  }

  TEST_CASE("affine equivariance") {
    const TwoSampleData d = testing::random_data(21, 120, 80, 2, LinkFamily::linear, 0.3);
    Eigen::Matrix3d a;
    a << 1, 0, 0,  //
        0.5, 2.0, -0.3,  //
        -1.0, 0.4, 1.5;
    TwoSampleData t = d;
    t.source_x = d.source_x * a.transpose();
    t.target_x = d.target_x * a.transpose();
    const PropensityFit f = fit_propensity(d);
    const PropensityFit g = fit_propensity(t);
    CHECK((g.gamma_hat - a.transpose().inverse() * f.gamma_hat).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK((g.weights_source - f.weights_source).lpNorm<Eigen::Infinity>() <= 1e-8);
  }

  TEST_CASE("unreachable target means diverge") {
    const TwoSampleData d = one_covariate({-1.0, 0.0, 1.0}, {2.0, 3.0});
    CHECK_THROWS_AS(fit_propensity(d), DivergenceError);
  }

  TEST_CASE("rank-deficient source design") {
    Eigen::MatrixXd xs(4, 2), xt(2, 2);
    xs << 1, 2, 2, 4, 3, 6, 4, 8;
    xt << 1, 1, 2, 1;
    const TwoSampleData d = make_two_sample(xs, Eigen::VectorXd::Ones(4), xt, true);
    CHECK_THROWS_AS(fit_propensity(d), SingularMatrixError);
  }

  TEST_CASE("iteration cap reports non-convergence with the residual") {
    const TwoSampleData d = testing::random_data(3, 100, 100, 3, LinkFamily::linear, 0.8);
    try {
      fit_propensity(d, {1e-9, 1});
      FAIL("expected non-convergence");
    } catch (const ConvergenceError& e) {
      CHECK(e.residual() > 1e-9);
    }
  }
}
