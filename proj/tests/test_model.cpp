#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "linfsc/error.hpp"
#include "linfsc/model.hpp"
#include "linfsc/penalty.hpp"
#include "oracles.hpp"

using namespace linfsc;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("panel accessors") {
  Matrix raw(5, 3);
  raw << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15;
  PanelData p = validate_panel(raw, 3);
  CHECK(p.T() == 5);
  CHECK(p.J() == 2);
  CHECK(p.t0() == 3);
  CHECK(p.t1() == 2);
  CHECK(p.treated_pre().size() == 3);
  CHECK(p.treated_post()(1) == 13);
  CHECK(p.controls_pre()(2, 1) == 9);
  CHECK(p.controls_post()(0, 0) == 11);
  CHECK(p.unit_labels().front() == "unit0");
  CHECK(p.time_labels().back() == "t5");
  CHECK_FALSE(p.short_pre_period());
  CHECK(validate_panel(raw, 2).short_pre_period());
}

TEST_CASE("panel validation errors") {
  Matrix raw = Matrix::Ones(4, 3);
  CHECK(code_of([&] { validate_panel(raw, 0); }) == ErrorCode::BadCutover);
  CHECK(code_of([&] { validate_panel(raw, 4); }) == ErrorCode::BadCutover);
  CHECK(code_of([&] { validate_panel(Matrix::Ones(4, 1), 2); }) == ErrorCode::TooFewControls);
  Matrix bad = raw;
  bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { validate_panel(bad, 2); }) == ErrorCode::NonFinite);
  bad(1, 2) = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { validate_panel(bad, 2); }) == ErrorCode::NonFinite);
  CHECK(code_of([&] { validate_panel(raw, 2, {"a", "b"}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("penalty spec") {
  CHECK(parse_penalty_kind("linf") == PenaltyKind::LInf);
  CHECK(parse_penalty_kind("l1linf") == PenaltyKind::L1PlusLInf);
  CHECK(parse_penalty_kind("sc") == PenaltyKind::ConventionalSC);
  CHECK_THROWS_AS(parse_penalty_kind("l2"), Error);
  for (auto kind : {PenaltyKind::None, PenaltyKind::Lasso, PenaltyKind::Ridge,
                    PenaltyKind::ElasticNet, PenaltyKind::LInf, PenaltyKind::L1PlusLInf,
                    PenaltyKind::ConventionalSC}) {
    CHECK(parse_penalty_kind(to_string(kind)) == kind);
  }
  CHECK(PenaltySpec::make(PenaltyKind::ConventionalSC).fit_intercept == false);
  CHECK_THROWS_AS(PenaltySpec::make(PenaltyKind::LInf, -1.0), Error);
  CHECK_THROWS_AS(PenaltySpec::make(PenaltyKind::ElasticNet, 1.0, 1.5), Error);
  CHECK(uses_alpha(PenaltyKind::L1PlusLInf));
  CHECK_FALSE(uses_alpha(PenaltyKind::LInf));
  CHECK_FALSE(uses_lambda(PenaltyKind::ConventionalSC));
}

TEST_CASE("centering") {
  Vector y(3);
  y << 1, 2, 3;
  Matrix Y(3, 2);
  Y << 5, 1, 5, 2, 5, 6;
  CenteredDesign d = center_design(y, Y, true);
  CHECK(d.y_mean == 2);
  CHECK(d.y(0) == -1);
  CHECK(d.y(2) == 1);
  CHECK(d.Y.col(0).isZero());
  CHECK(d.col_means(0) == 5);
  CHECK(d.centered);

  CenteredDesign raw = center_design(y, Y, false);
  CHECK(raw.y == y);
  CHECK(raw.Y == Y);
  CHECK(raw.col_means.isZero());
  CHECK(raw.y_mean == 0);

  CenteredDesign twice = center_design(d.y, d.Y, true);
  CHECK((twice.y - d.y).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((twice.Y - d.Y).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("centering a panel uses the pre-period only") {
  Matrix raw(4, 2);
  raw << 1, 10, 3, 20, 100, 30, 200, 40;
  CenteredDesign d = center_design(validate_panel(raw, 2), true);
  CHECK(d.rows() == 2);
  CHECK(d.y_mean == 2);
  CHECK(d.col_means(0) == 15);
}

TEST_CASE("intercept recovery") {
  CenteredDesign d;
  d.y_mean = 2;
  d.Y = Matrix::Zero(1, 2);
  d.col_means = Vector::Ones(2);
  d.centered = true;
  CHECK(recover_intercept(Vector::Zero(2), d) == 2);
  CHECK(recover_intercept(Vector::Constant(2, 0.5), d) == 1);
}

TEST_CASE("centered fit equals the explicit intercept program") {
  std::mt19937_64 rng(20);
  Matrix Y = oracle::gaussian(20, 5, rng);
  Vector y = Y * oracle::gaussian(5, 1, rng).col(0) + oracle::gaussian(20, 1, rng).col(0);
  y.array() += 3.0;
  CenteredDesign d = center_design(y, Y, true);
  for (auto kind : {PenaltyKind::LInf, PenaltyKind::L1PlusLInf, PenaltyKind::Lasso}) {
    PenaltySpec spec = PenaltySpec::make(kind, 0.8, 0.4);
    WeightFit centered = solve_penalized(d, spec);
    PenalizedProgram explicit_mu = build_program_with_intercept(y, Y, spec);
    QpSolution s = solve_qp(explicit_mu.qp, SolverSettings{}, explicit_mu.start);
    REQUIRE(s.status == QpStatus::Optimal);
    CHECK(std::abs(s.x[*explicit_mu.layout.mu] - centered.mu_hat) < 1e-8);
    CHECK((s.x.segment(explicit_mu.layout.omega_begin, 5) - centered.omega_hat)
              .lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("error categories") {
  CHECK(category_of(ErrorCode::ConfigError) == ErrorCategory::Config);
  CHECK(category_of(ErrorCode::ParseError) == ErrorCategory::Data);
  CHECK(category_of(ErrorCode::SolverFailure) == ErrorCategory::Solver);
  CHECK(to_string(ErrorCode::RaggedRows) == "RaggedRows");
}
