#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mest/simgen.hpp"
#include "mest/stats.hpp"

using namespace mest;
using Catch::Approx;

TEST_CASE("ar1 covariance entries") {
  const Eigen::MatrixXd s2 = ar1_covariance(2, 0.5);
  CHECK(s2(0, 0) == 1.0);
  CHECK(s2(0, 1) == 0.5);
  CHECK(s2(1, 0) == 0.5);
  CHECK(s2(1, 1) == 1.0);

  CHECK(ar1_covariance(3, 0.0).isIdentity(0.0));
  CHECK(ar1_covariance(3, 0.5)(0, 2) == Approx(0.25));
  CHECK_THROWS_AS(ar1_covariance(3, 1.0), std::invalid_argument);
}

TEST_CASE("design sample covariance approaches the ar1 target") {
  const Eigen::MatrixXd X = gen_design(20000, 3, 0.5, 18);
  const Eigen::MatrixXd S = (X.transpose() * X) / 20000.0;
  const Eigen::MatrixXd target = ar1_covariance(3, 0.5);
  CHECK((S - target).cwiseAbs().maxCoeff() <= 0.02);
}

TEST_CASE("independent columns when rho is zero") {
  const Eigen::MatrixXd X = gen_design(20000, 3, 0.0, 77);
  const Eigen::MatrixXd S = (X.transpose() * X) / 20000.0;
  CHECK(std::abs(S(0, 1)) <= 0.02);
  CHECK(std::abs(S(0, 2)) <= 0.02);
  CHECK(std::abs(S(1, 2)) <= 0.02);
}

TEST_CASE("design generation is deterministic in the seed") {
  const Eigen::MatrixXd a = gen_design(50, 4, 0.5, 123);
  const Eigen::MatrixXd b = gen_design(50, 4, 0.5, 123);
  CHECK(a == b);
  const Eigen::MatrixXd c = gen_design(50, 4, 0.5, 124);
  CHECK(a != c);
}

TEST_CASE("error law variances") {
  const Eigen::Index n = 1'000'000;
  const auto var = [](const Eigen::VectorXd& e) {
    const double m = e.mean();
    return (e.array() - m).square().sum() / double(e.size());
  };
  CHECK(var(gen_errors(n, ErrorDist::std_normal(), 5)) == Approx(1.0).margin(0.01));
  CHECK(var(gen_errors(n, ErrorDist::student_t5(), 6)) == Approx(5.0 / 3.0).margin(0.02));
  CHECK(var(gen_errors(n, ErrorDist::normal_mixture(), 7)) == Approx(1.8).margin(0.02));
}

TEST_CASE("standard normal draws pass a fixed-seed KS check") {
  const Eigen::VectorXd e = gen_errors(100000, ErrorDist::std_normal(), 2026);
  const std::vector<double> v(e.data(), e.data() + e.size());
  CHECK(ks_statistic_vs_normal(v) < 1.63 / std::sqrt(100000.0));  // 1% critical value
}

TEST_CASE("dimension rule p = [2 sqrt(n)] rounds half up") {
  CHECK(default_dimension(200) == 28);
  CHECK(default_dimension(500) == 45);
  CHECK(default_dimension(700) == 53);
}

TEST_CASE("generated datasets compose y = X beta0 + errors") {
  ScenarioConfig cfg;
  cfg.n = 60;
  cfg.seed = 31415;
  const GeneratedData g = gen_dataset(cfg, 3);

  CHECK(g.support == std::vector<Eigen::Index>{0, 1, 2, 3});
  CHECK(g.beta0.head(4) == cfg.beta_nonzero);
  CHECK(g.beta0.tail(g.beta0.size() - 4).isZero(0.0));

  const Eigen::VectorXd e = gen_errors(cfg.n, cfg.dist, error_seed(cfg, 3));
  const Eigen::VectorXd reconstructed = g.data.X * g.beta0 + e;
  CHECK(g.data.y == reconstructed);
}

TEST_CASE("replicates are bit-reproducible and distinct") {
  ScenarioConfig cfg;
  cfg.n = 40;
  cfg.seed = 999;
  const GeneratedData a = gen_dataset(cfg, 7);
  const GeneratedData b = gen_dataset(cfg, 7);
  CHECK(a.data.X == b.data.X);
  CHECK(a.data.y == b.data.y);
  const GeneratedData c = gen_dataset(cfg, 8);
  CHECK(a.data.y != c.data.y);
}

TEST_CASE("scenario validation") {
  ScenarioConfig cfg;
  cfg.n = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.n = 10;
  cfg.rho = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.rho = 0.5;
  cfg.p = 2;  // below the number of nonzero coefficients
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("scenario id names the size and the law") {
  ScenarioConfig cfg;
  cfg.n = 500;
  cfg.dist = ErrorDist::student_t5();
  CHECK(cfg.scenario_id() == "n500_t5");
}
