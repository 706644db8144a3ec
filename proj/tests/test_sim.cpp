#include <doctest.h>

#include <cmath>
#include <random>

#include "linfsc/error.hpp"
#include "linfsc/sim.hpp"
#include "oracles.hpp"

using namespace linfsc;

TEST_CASE("substreams") {
  CHECK(substream_seed(1, "cv", 0) == substream_seed(1, "cv", 0));
  CHECK(substream_seed(1, "cv", 0) != substream_seed(1, "cv", 1));
  CHECK(substream_seed(1, "cv", 0) != substream_seed(1, "simulate", 0));
  CHECK(substream_seed(1, "cv", 0) != substream_seed(2, "cv", 0));
}

TEST_CASE("weights per dgp") {
  std::mt19937_64 rng(50);
  Vector w1 = gen_weights(Dgp::DGP1, 30, rng);
  for (double v : w1) CHECK(v == doctest::Approx(1.0 / 30));
  Vector w2 = gen_weights(Dgp::DGP2, 30, rng);
  CHECK(w2.cwiseAbs().maxCoeff() < 0.1);
  Vector w3 = gen_weights(Dgp::DGP3, 30, rng);
  CHECK(w3.cwiseAbs().maxCoeff() <= 0.05);
  Vector w4 = gen_weights(Dgp::DGP4, 30, rng);
  CHECK((w4.array() == 0.0).count() == 15);
  CHECK_THROWS_AS(gen_weights(Dgp::DGP4, 31, rng), Error);
}

TEST_CASE("dgp2 and dgp3 weights are centred") {
  std::mt19937_64 rng(51);
  for (Dgp dgp : {Dgp::DGP2, Dgp::DGP3}) {
    const int draws = 10000;
    Vector all(draws);
    for (int i = 0; i < draws; ++i) all[i] = gen_weights(dgp, 1, rng)[0];
    const double mean = all.mean();
    const double sd = std::sqrt((all.array() - mean).square().sum() / (draws - 1));
    CHECK(std::abs(mean) < 3 * sd / std::sqrt(static_cast<double>(draws)));
  }
}

TEST_CASE("error generators") {
  std::mt19937_64 rng(52);
  ErrorSpec iid;
  Vector e = gen_errors(iid, 100000, 1.0, rng);
  const double var = (e.array() - e.mean()).square().sum() / (e.size() - 1);
  CHECK(std::abs(var - 1.0) < 0.02);

  ErrorSpec ar;
  ar.kind = ErrorKind::AR1;
  CHECK(std::abs(oracle::autocorrelation(gen_errors(ar, 100000, 1.0, rng), 1) - 0.1) < 0.02);

  ErrorSpec arma;
  arma.kind = ErrorKind::ARMA11;
  const double rho = 0.1, theta = 0.1;
  const double acf = (1 + rho * theta) * (rho + theta) / (1 + 2 * rho * theta + theta * theta);
  CHECK(acf == doctest::Approx(0.2 * 1.01 / 1.03).epsilon(1e-12));
  CHECK(std::abs(oracle::autocorrelation(gen_errors(arma, 100000, 1.0, rng), 1) - acf) < 0.02);

  ErrorSpec bad;
  bad.kind = ErrorKind::AR1;
  bad.rho = 1.0;
  CHECK_THROWS_AS(gen_errors(bad, 10, 1.0, rng), Error);
  CHECK(parse_error_kind("arma11") == ErrorKind::ARMA11);
  CHECK_THROWS_AS(parse_error_kind("garch"), Error);
}

TEST_CASE("generated panel") {
  DgpSpec spec;
  spec.seed = 9;
  SimPanel s = gen_panel(spec);
  CHECK(s.panel.T() == 110);
  CHECK(s.panel.outcomes().cols() == 31);
  CHECK(s.panel.t0() == 100);
  CHECK(s.loadings(0, 0) == doctest::Approx(1.0 / 30));
  CHECK(s.loadings(29, 1) == doctest::Approx(1.0));

  // rebuild from the parts
  Matrix rebuilt(110, 31);
  for (Index i = 0; i < 30; ++i) {
    rebuilt.col(i + 1) = (s.factors.col(0) + s.loadings(i, 1) * s.factors.col(1) +
                          s.control_errors.col(i)).array() + s.loadings(i, 0);
  }
  rebuilt.col(0) = rebuilt.rightCols(30) * s.true_weights + s.treated_errors;
  rebuilt.col(0).tail(10).array() += s.true_effect;
  CHECK((rebuilt - s.panel.outcomes()).lpNorm<Eigen::Infinity>() < 1e-12);

  // treated minus synthetic is exactly the error, plus delta afterwards
  Vector gap = s.panel.treated() - s.panel.controls() * s.true_weights - s.treated_errors;
  CHECK(gap.head(100).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((gap.tail(10).array() - 3.0).abs().maxCoeff() < 1e-12);

  CHECK(gen_panel(spec).panel == s.panel);
  spec.seed = 10;
  CHECK_FALSE(gen_panel(spec).panel == s.panel);
}

TEST_CASE("dgp spec validation") {
  DgpSpec spec;
  spec.dgp = Dgp::DGP4;
  spec.j = 7;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.j = 8;
  spec.t1 = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  CHECK_THROWS_AS(parse_dgp(5), Error);
}

TEST_CASE("oracle is exact without noise") {
  ExperimentConfig config;
  config.spec.j = 6;
  config.spec.t0 = 20;
  config.spec.t1 = 5;
  config.spec.error.u_sd = 1e-300;
  config.methods = {Method::Oracle};
  config.b = 5;
  config.horizons = {1, 5};
  RmseTable t = run_experiment(config);
  CHECK(t.at(Method::Oracle, 1) < 1e-12);
  CHECK(t.at(Method::Oracle, 5) < 1e-12);
}

TEST_CASE("experiment is reproducible and thread independent") {
  ExperimentConfig config;
  config.spec.j = 6;
  config.spec.t0 = 30;
  config.spec.t1 = 4;
  config.spec.seed = 77;
  config.methods = {Method::Oracle, Method::SC, Method::LInf, Method::L1PlusLInf};
  config.b = 4;
  config.horizons = {1, 4};
  config.tuning.n_lambda = 4;
  config.tuning.n_alpha = 3;
  config.tuning.k = 3;
  config.threads = 1;
  RmseTable a = run_experiment(config);
  config.threads = 3;
  RmseTable b = run_experiment(config);
  REQUIRE(a.rows.size() == 8);
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].rmse == b.rows[i].rmse);
    CHECK(a.rows[i].rmse >= 0.0);
  }
  CHECK(a.failures.at(Method::LInf) == 0);

  config.reading = HorizonReading::SinglePeriod;
  RmseTable single = run_experiment(config);
  // horizon 1 coincides under both readings
  CHECK(single.at(Method::Oracle, 1) == a.at(Method::Oracle, 1));
  CHECK(single.at(Method::Oracle, 4) != a.at(Method::Oracle, 4));

  config.horizons = {5};
  CHECK_THROWS_AS(run_experiment(config), Error);
}

TEST_CASE("method names") {
  for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("ols"), Error);
  CHECK(penalty_kind(Method::SC) == PenaltyKind::ConventionalSC);
}
