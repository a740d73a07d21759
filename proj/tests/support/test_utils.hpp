#pragma once

// Shared helpers for the test suites: small random instances and the
// brute-force grid oracle used to certify solver objectives independently of
// the solver's own path. Convexity of the objective means the coarse pass
// lands within one cell of the optimum, so a local refinement at step 1e-3
// recovers the minimum to grid accuracy.

#include <random>
#include <stdexcept>

#include "mest/data.hpp"
#include "mest/losses.hpp"
#include "mest/penalties.hpp"
#include "mest/solver.hpp"

namespace mest::testing {

inline Dataset random_dataset(std::mt19937& gen, Eigen::Index n, Eigen::Index p,
                              double noise = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = normal(gen);
    y[i] = noise * normal(gen);
  }
  return Dataset(std::move(X), std::move(y));
}

inline double grid_oracle_objective(const Dataset& data, const LossSpec& loss,
                                    const PenaltyWeights& weights) {
  const Eigen::Index p = data.p();
  if (p > 2) throw std::invalid_argument("grid oracle supports p <= 2");

  auto value = [&](double b0, double b1) {
    Eigen::VectorXd b(p);
    b[0] = b0;
    if (p == 2) b[1] = b1;
    return penalized_objective(data, loss, weights, b);
  };

  double best = std::numeric_limits<double>::infinity();
  double arg0 = 0.0, arg1 = 0.0;
  const double coarse = 0.05;
  for (double b0 = -5.0; b0 <= 5.0 + 1e-12; b0 += coarse) {
    if (p == 1) {
      const double v = value(b0, 0.0);
      if (v < best) { best = v; arg0 = b0; }
      continue;
    }
    for (double b1 = -5.0; b1 <= 5.0 + 1e-12; b1 += coarse) {
      const double v = value(b0, b1);
      if (v < best) { best = v; arg0 = b0; arg1 = b1; }
    }
  }

  const double fine = 1e-3, window = coarse + 0.01;
  for (double b0 = arg0 - window; b0 <= arg0 + window + 1e-12; b0 += fine) {
    if (p == 1) {
      best = std::min(best, value(b0, 0.0));
      continue;
    }
    for (double b1 = arg1 - window; b1 <= arg1 + window + 1e-12; b1 += fine)
      best = std::min(best, value(b0, b1));
  }
  return best;
}

}  // namespace mest::testing
