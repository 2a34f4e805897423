#include <cmath>
#include <string>

#include "doctest.h"
#include "padr/basis.hpp"
#include "padr/errors.hpp"

using namespace padr;

namespace {

TwoSampleData two_covariates(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& xt) {
  return make_two_sample(xs, Eigen::VectorXd::Ones(xs.rows()), xt, true);
}

}  // namespace

TEST_SUITE("basis") {
  TEST_CASE("primitive transforms") {
    SUBCASE("identity") {
      const TwoSampleData d = two_covariates((Eigen::MatrixXd(2, 1) << 0.5, -0.5).finished(),
                                             (Eigen::MatrixXd(1, 1) << 0.0).finished());
      const RawBasis b = evaluate_basis({{identity(1)}}, d);
      CHECK(b.source(0, 0) == 0.5);
      CHECK(b.source(1, 0) == -0.5);
    }
    SUBCASE("abs and square") {
      const TwoSampleData d = two_covariates((Eigen::MatrixXd(2, 1) << -2.0, 1.0).finished(),
                                             (Eigen::MatrixXd(1, 1) << 1.0).finished());
      const RawBasis b = evaluate_basis({{abs_of(1), square(1)}}, d);
      CHECK(b.source(0, 0) == 2.0);
      CHECK(b.source(0, 1) == 4.0);
    }
    SUBCASE("exp_negsum at the origin") {
      const TwoSampleData d = two_covariates(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Ones(1, 2));
      const RawBasis b = evaluate_basis({{exp_negsum({1, 2})}}, d);
      CHECK(b.source(0, 0) == 1.0);
      CHECK(b.target(0, 0) == doctest::Approx(std::exp(-2.0)));
    }
    SUBCASE("exp_scaled") {
      const TwoSampleData d = two_covariates((Eigen::MatrixXd(2, 1) << 2.0, 0.0).finished(), Eigen::MatrixXd::Zero(1, 1));
      const RawBasis b = evaluate_basis({{exp_scaled(-0.3, 1)}}, d);
      CHECK(b.source(0, 0) == doctest::Approx(std::exp(-0.6)));
    }
  }

  TEST_CASE("presets") {
    CHECK(preset_sim(3).dim() == 13);
    CHECK(preset_sim(2).dim() == 7);
    const BasisSpec k = preset_k401(9, {1, 2, 3, 4});
    CHECK(k.dim() == 9 + 12);
    CHECK(k.transforms[9] == exp_scaled(-0.3, 1));
  }

  TEST_CASE("json round trip and the documented example") {
    const std::string doc =
        R"({"transforms":[{"kind":"identity","j":1},{"kind":"exp_scaled","c":-0.3,"j":2},)"
        R"({"kind":"abs","j":1},{"kind":"square","j":3},{"kind":"exp_negsum","js":[1,2]}]})";
    const BasisSpec spec = parse_basis_json(doc);
    REQUIRE(spec.dim() == 5);
    CHECK(spec.transforms[1] == exp_scaled(-0.3, 2));
    CHECK(spec.transforms[4] == exp_negsum({1, 2}));
    CHECK(parse_basis_json(to_json(spec)).transforms == spec.transforms);
    CHECK(parse_basis_json(to_json(preset_sim(3))).transforms == preset_sim(3).transforms);
  }

  TEST_CASE("malformed specs") {
    CHECK_THROWS_AS(parse_basis_json("not json"), ValidationError);
    CHECK_THROWS_AS(parse_basis_json(R"({"transforms":[{"kind":"cube","j":1}]})"), ValidationError);
    CHECK_THROWS_AS(parse_basis_json(R"({"transforms":[{"kind":"identity"}]})"), ValidationError);
    CHECK_THROWS_AS(parse_basis_json(R"({"other":[]})"), ValidationError);
  }

  TEST_CASE("evaluation errors and warnings") {
    const TwoSampleData d = two_covariates((Eigen::MatrixXd(3, 2) << 1, 5, 2, 5, 3, 5).finished(),
                                           (Eigen::MatrixXd(2, 2) << 0, 5, 1, 5).finished());
    CHECK_THROWS_AS(evaluate_basis({{identity(3)}}, d), ValidationError);
    CHECK_THROWS_AS(evaluate_basis({{identity(0)}}, d), ValidationError);
    CHECK_THROWS_AS(evaluate_basis({{identity(1), identity(1)}}, d), ValidationError);
    CHECK_THROWS_AS(build_basis({{identity(1), identity(2)}}, d), ValidationError);  // p <= d
    const RawBasis b = build_basis({{identity(1), identity(2), square(1), abs_of(1)}}, d);
    REQUIRE(b.warnings.size() == 1);
    CHECK(b.warnings[0].find("x2") != std::string::npos);

    const TwoSampleData big = two_covariates((Eigen::MatrixXd(2, 1) << 800.0, 1.0).finished(),
                                             Eigen::MatrixXd::Zero(1, 1));
    try {
      evaluate_basis({{exp_scaled(1.0, 1)}}, big);
      FAIL("expected non-finite error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("--standardize") != std::string::npos);
    }
  }
}
