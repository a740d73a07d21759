#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <limits>

#include "mest/penalties.hpp"

using namespace mest;
using Catch::Approx;

TEST_CASE("scad value branches") {
  const ScadParams p(1.0, 3.7);
  CHECK(scad_value(p, 0.5) == Approx(0.5));
  CHECK(scad_value(p, 3.7) == Approx(0.5 * 4.7));  // continuity at a*lambda
  CHECK(scad_value(p, 10.0) == Approx(2.35));
  CHECK(scad_value(p, -0.5) == Approx(0.5));  // even in beta
}

TEST_CASE("scad value is continuous at the breakpoints") {
  for (double lambda : {0.2, 1.0, 2.5}) {
    const ScadParams p(lambda, 3.7);
    for (const double b : {lambda, 3.7 * lambda}) {
      const double left = std::nextafter(b, 0.0);
      const double right = std::nextafter(b, 8.0 * b);
      CHECK(std::abs(scad_value(p, left) - scad_value(p, right)) <= 1e-12);
      CHECK(std::abs(scad_value(p, left) - scad_value(p, b)) <= 1e-12);
    }
  }
}

TEST_CASE("scad derivative branches") {
  const ScadParams p(1.0, 3.7);
  CHECK(scad_derivative(p, 0.5) == 1.0);
  CHECK(scad_derivative(p, 1.0) == 1.0);  // indicator closed on the left
  CHECK(scad_derivative(p, 2.0) == Approx(1.7 / 2.7));
  CHECK(scad_derivative(p, 5.0) == 0.0);
  CHECK_THROWS_AS(scad_derivative(p, -0.1), std::invalid_argument);
}

TEST_CASE("scad derivative matches finite differences of the value") {
  const ScadParams p(0.8, 3.7);
  const double h = 1e-7;
  for (double b = 0.05; b < 4.0; b += 0.07) {
    // skip the breakpoints themselves
    if (std::abs(b - p.lambda) < 0.02 || std::abs(b - p.a * p.lambda) < 0.02) continue;
    const double fd = (scad_value(p, b + h) - scad_value(p, b - h)) / (2.0 * h);
    CHECK(scad_derivative(p, b) == Approx(fd).margin(1e-6));
  }
}

TEST_CASE("scad derivative is nonincreasing") {
  const ScadParams p(1.3, 3.7);
  double prev = std::numeric_limits<double>::infinity();
  for (double b = 0.0; b < 8.0; b += 0.01) {
    const double d = scad_derivative(p, b);
    CHECK(d <= prev + 1e-15);
    prev = d;
  }
}

TEST_CASE("scad parameter validation") {
  CHECK_THROWS_AS(ScadParams(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(ScadParams(1.0, 2.0), std::invalid_argument);
  CHECK(ScadParams(0.0).a == Approx(3.7));
}

TEST_CASE("lla weights") {
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(4);
  const PenaltyWeights w0 = lla_weights(ScadParams(1.0), zeros);
  CHECK(w0.w.isApproxToConstant(1.0));

  Eigen::VectorXd pilot(2);
  pilot << 5.0, 0.5;
  const PenaltyWeights w = lla_weights(ScadParams(1.0, 3.7), pilot);
  CHECK(w.w[0] == 0.0);
  CHECK(w.w[1] == 1.0);

  const PenaltyWeights wz = lla_weights(ScadParams(0.0), pilot);
  CHECK(wz.w.isZero());
}

TEST_CASE("lla weights vanish exactly beyond a*lambda") {
  const ScadParams p(0.4, 3.7);
  Eigen::VectorXd pilot(3);
  pilot << 1.4801, -2.0, 100.0;  // all above a*lambda = 1.48
  const PenaltyWeights w = lla_weights(p, pilot);
  for (int j = 0; j < 3; ++j) CHECK(w.w[j] == 0.0);
}

TEST_CASE("non-finite pilots are rejected") {
  Eigen::VectorXd pilot(2);
  pilot << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(lla_weights(ScadParams(1.0), pilot), std::invalid_argument);
  pilot[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(lla_weights(ScadParams(1.0), pilot), std::invalid_argument);
}

TEST_CASE("lasso weights") {
  const PenaltyWeights w = lasso_weights(0.3, 3);
  CHECK(w.size() == 3);
  CHECK(w.w.isApproxToConstant(0.3));
  CHECK(lasso_weights(0.0, 5).w.isZero());
  CHECK(lasso_weights(2.0, 1).w[0] == 2.0);
  CHECK_THROWS_AS(lasso_weights(-1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(lasso_weights(1.0, 0), std::invalid_argument);
}

TEST_CASE("penalty weights must be nonnegative and finite") {
  Eigen::VectorXd bad(2);
  bad << 0.5, -0.1;
  CHECK_THROWS_AS(PenaltyWeights(bad), std::invalid_argument);
}
