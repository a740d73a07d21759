#pragma once

// SCAD penalty, its derivative, and construction of the per-coefficient L1
// weight vectors used by the two-stage (pilot -> weights -> penalized fit)
// procedure and by the plain Lasso comparison.

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace mest {

struct ScadParams {
  double lambda = 0.0;
  double a = 3.7;

  ScadParams(double lambda_, double a_ = 3.7) : lambda(lambda_), a(a_) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("scad lambda must be a nonnegative real");
    if (!(a > 2.0) || !std::isfinite(a))
      throw std::invalid_argument("scad a must exceed 2");
  }
};

// Piecewise penalty value: lambda|b| on [0, lambda], a quadratic blend on
// (lambda, a*lambda], constant (a+1) lambda^2 / 2 beyond.
inline double scad_value(const ScadParams& p, double beta) {
  const double t = std::abs(beta);
  const double l = p.lambda;
  if (t <= l) return l * t;
  if (t <= p.a * l) return -(t * t - 2.0 * p.a * l * t + l * l) / (2.0 * (p.a - 1.0));
  return 0.5 * (p.a + 1.0) * l * l;
}

// Derivative as written: lambda on [0, lambda], linearly decaying to zero on
// (lambda, a*lambda], zero beyond. Indicators are closed on the left.
inline double scad_derivative(const ScadParams& p, double beta_abs) {
  if (!(beta_abs >= 0.0))
    throw std::invalid_argument("scad derivative takes |beta| >= 0");
  const double l = p.lambda;
  if (beta_abs <= l) return l;
  if (beta_abs <= p.a * l) return (p.a * l - beta_abs) / (p.a - 1.0);
  return 0.0;
}

struct PenaltyWeights {
  Eigen::VectorXd w;

  explicit PenaltyWeights(Eigen::VectorXd weights) : w(std::move(weights)) {
    for (Eigen::Index j = 0; j < w.size(); ++j)
      if (!(w[j] >= 0.0) || !std::isfinite(w[j]))
        throw std::invalid_argument("penalty weights must be nonnegative and finite");
  }

  static PenaltyWeights zero(Eigen::Index p) {
    return PenaltyWeights(Eigen::VectorXd::Zero(p));
  }

  Eigen::Index size() const { return w.size(); }
};

// LLA weights: w_j = p'_lambda(|pilot_j|). Non-finite pilot entries are a
// solver bug upstream and are rejected rather than clamped.
inline PenaltyWeights lla_weights(const ScadParams& params, const Eigen::VectorXd& pilot) {
  Eigen::VectorXd w(pilot.size());
  for (Eigen::Index j = 0; j < pilot.size(); ++j) {
    if (!std::isfinite(pilot[j]))
      throw std::invalid_argument("pilot coefficients must be finite");
    w[j] = scad_derivative(params, std::abs(pilot[j]));
  }
  return PenaltyWeights(std::move(w));
}

inline PenaltyWeights lasso_weights(double lambda, Eigen::Index p) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lasso lambda must be a nonnegative real");
  if (p < 1) throw std::invalid_argument("dimension must be at least 1");
  return PenaltyWeights(Eigen::VectorXd::Constant(p, lambda));
}

}  // namespace mest
