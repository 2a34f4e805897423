#include <cmath>
#include <random>

#include "doctest.h"
#include "padr/data.hpp"
#include "padr/errors.hpp"
#include "padr/link.hpp"

using namespace padr;

TEST_SUITE("link") {
  TEST_CASE("link_eval examples") {
    CHECK(link_eval(LinkFamily::linear, 3.0).g == 3.0);
    CHECK(link_eval(LinkFamily::linear, 3.0).g_dot == 1.0);
    CHECK(link_eval(LinkFamily::logistic, 0.0).g == 0.5);
    CHECK(link_eval(LinkFamily::logistic, 0.0).g_dot == 0.25);
    CHECK(link_eval(LinkFamily::poisson, 0.0).g == 1.0);
    CHECK(link_eval(LinkFamily::poisson, 0.0).g_dot == 1.0);
  }

  TEST_CASE("logistic is stable at the extremes") {
    for (double a : {-700.0, -50.0, 50.0, 700.0}) {
      const auto v = link_eval(LinkFamily::logistic, a);
      CHECK(std::isfinite(v.g));
      CHECK(std::isfinite(v.g_dot));
      CHECK(v.g >= 0.0);
      CHECK(v.g <= 1.0);
    }
    CHECK(link_eval(LinkFamily::logistic, -30.0).g == doctest::Approx(std::exp(-30.0)).epsilon(1e-12));
  }

  TEST_CASE("poisson overflow names the predictor") {
    try {
      link_eval(LinkFamily::poisson, 701.0);
      FAIL("expected overflow");
    } catch (const OverflowError& e) {
      CHECK(std::string(e.what()).find("701") != std::string::npos);
    }
    CHECK_NOTHROW(link_eval(LinkFamily::poisson, 700.0));
  }

  TEST_CASE("derivative matches a central difference") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (auto fam : {LinkFamily::linear, LinkFamily::logistic, LinkFamily::poisson}) {
      for (int k = 0; k < 20; ++k) {
        const double a = u(rng), h = 1e-5;
        const double fd = (link_eval(fam, a + h).g - link_eval(fam, a - h).g) / (2 * h);
        CHECK(link_eval(fam, a).g_dot == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("vectorized forms match scalar evaluation") {
    const Eigen::VectorXd eta = Eigen::VectorXd::LinSpaced(9, -3.0, 3.0);
    const Eigen::VectorXd g = link_mean(LinkFamily::logistic, eta);
    const Eigen::VectorXd gd = link_derivative(LinkFamily::logistic, eta);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      CHECK(g(i) == link_eval(LinkFamily::logistic, eta(i)).g);
      CHECK(gd(i) == link_eval(LinkFamily::logistic, eta(i)).g_dot);
    }
  }

  TEST_CASE("parse and print") {
    CHECK(parse_link_family("logistic") == LinkFamily::logistic);
    CHECK(to_string(LinkFamily::poisson) == "poisson");
    CHECK_THROWS_AS(parse_link_family("probit"), UsageError);
  }

  TEST_CASE("estimate_theta and variance_eval") {
    const Eigen::MatrixXd xs = Eigen::MatrixXd::Zero(2, 1);
    const TwoSampleData d = make_two_sample(xs, (Eigen::VectorXd(2) << 1.0, -1.0).finished(),
                                            Eigen::MatrixXd::Zero(1, 1), true);
    SUBCASE("linear residuals {1, -1} give sigma2 = 1") {
      const VarianceModel m = estimate_theta(LinkFamily::linear, d, Eigen::Vector2d(0.0, 0.0));
      CHECK(m.sigma2 == 1.0);
    }
    SUBCASE("exact fit is degenerate") {
      const TwoSampleData exact = make_two_sample(xs, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(1, 1), true);
      CHECK_THROWS_AS(estimate_theta(LinkFamily::linear, exact, Eigen::Vector2d(0.0, 0.0)), SolverError);
    }
    SUBCASE("logistic carries alpha; v = 0.25 where x'alpha = 0") {
      const Eigen::Vector2d alpha(0.3, -0.6);
      const VarianceModel m = estimate_theta(LinkFamily::logistic, d, alpha);
      CHECK(m.alpha == alpha);
      CHECK(variance_eval(m, Eigen::Vector2d(1.0, 0.5)) == 0.25);
    }
    SUBCASE("linear sigma2 = 2 at any x, bitwise constant") {
      VarianceModel m;
      m.sigma2 = 2.0;
      CHECK(variance_eval(m, Eigen::Vector2d(1.0, 9.0)) == 2.0);
      CHECK(variance_eval(m, Eigen::Vector2d(1.0, -3.0)) == variance_eval(m, Eigen::Vector2d(1.0, 4.0)));
    }
    SUBCASE("poisson x'alpha = ln 3 gives 3") {
      VarianceModel m;
      m.family = LinkFamily::poisson;
      m.alpha = Eigen::Vector2d(std::log(3.0), 0.0);
      CHECK(variance_eval(m, Eigen::Vector2d(1.0, 5.0)) == doctest::Approx(3.0).epsilon(1e-15));
    }
    SUBCASE("logistic v equals g' exactly") {
      VarianceModel m;
      m.family = LinkFamily::logistic;
      m.alpha = Eigen::Vector2d(0.7, -1.3);
      const Eigen::Vector2d x(1.0, 0.37);
      CHECK(variance_eval(m, x) == link_eval(LinkFamily::logistic, x.dot(m.alpha)).g_dot);
    }
    SUBCASE("non-positive working variance is rejected") {
      VarianceModel m;
      m.family = LinkFamily::logistic;
      m.alpha = Eigen::Vector2d(800.0, 0.0);
      CHECK_THROWS_AS(variance_eval(m, Eigen::Vector2d(1.0, 0.0)), SolverError);
    }
  }
}
