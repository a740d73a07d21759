#pragma once

// BIC tuning over a data-driven lambda grid, orchestrating the two-stage
// procedure: pilot fit once, then per-lambda weights, fit, score.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mest/data.hpp"
#include "mest/losses.hpp"
#include "mest/penalties.hpp"
#include "mest/solver.hpp"

namespace mest {

struct LambdaGrid {
  std::vector<double> values;  // strictly descending, all positive

  explicit LambdaGrid(std::vector<double> v) : values(std::move(v)) {
    if (values.empty()) throw std::invalid_argument("lambda grid must be nonempty");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0) || !std::isfinite(values[i]))
        throw std::invalid_argument("lambda grid entries must be positive reals");
      if (i > 0 && !(values[i] < values[i - 1]))
        throw std::invalid_argument("lambda grid must be strictly descending");
    }
  }

  static LambdaGrid log_spaced(double lambda_max, int n_points = 50, double min_ratio = 1e-3) {
    if (!(lambda_max > 0.0)) throw std::invalid_argument("lambda_max must be positive");
    if (n_points < 1) throw std::invalid_argument("grid needs at least one point");
    if (!(min_ratio > 0.0 && min_ratio < 1.0))
      throw std::invalid_argument("min_ratio must lie in (0,1)");
    std::vector<double> v(static_cast<std::size_t>(n_points));
    if (n_points == 1) {
      v[0] = lambda_max;
    } else {
      for (int i = 0; i < n_points; ++i)
        v[static_cast<std::size_t>(i)] =
            lambda_max * std::pow(min_ratio, double(i) / double(n_points - 1));
    }
    return LambdaGrid(std::move(v));
  }

  std::size_t size() const { return values.size(); }
};

struct BicScore {
  double bic = 0.0;
  int df = 0;
};

// BIC(lambda) = ln(mean loss at beta) + df ln(n)/n with df = #{|beta_j| >
// zero_tol}. An exact fit (mean loss <= 1e-12) is degenerate and yields a
// -infinity sentinel that select_lambda discards.
inline BicScore bic_score(const Dataset& data, const LossSpec& loss,
                          const Eigen::VectorXd& beta, double zero_tol) {
  if (beta.size() != data.p()) throw std::invalid_argument("bic_score: shape mismatch");
  const Eigen::VectorXd r = data.y - data.X * beta;
  double mean_loss = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) mean_loss += loss_value(loss, r[i]);
  mean_loss /= static_cast<double>(data.n());
  int df = 0;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (std::abs(beta[j]) > zero_tol) ++df;
  if (mean_loss <= 1e-12)
    return {-std::numeric_limits<double>::infinity(), df};
  const double n = static_cast<double>(data.n());
  return {std::log(mean_loss) + df * std::log(n) / n, df};
}

// lambda_max = max_j (1/n) |sum_i phi0(y_i) x_ij| with phi0 the fixed
// representative subgradient at beta = 0; for LAD this makes the all-zero fit
// stationary at every lambda >= lambda_max. Falls back to [1e-3, 1] when the
// response carries no signal.
inline LambdaGrid default_grid(const Dataset& data, const LossSpec& loss,
                               int n_points = 50, double min_ratio = 1e-3) {
  Eigen::VectorXd phi0(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) phi0[i] = loss_phi(loss, data.y[i]);
  const double lambda_max =
      (data.X.transpose() * phi0).cwiseAbs().maxCoeff() / static_cast<double>(data.n());
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max))
    return LambdaGrid::log_spaced(1.0, n_points, 1e-3);
  return LambdaGrid::log_spaced(lambda_max, n_points, min_ratio);
}

enum class TuneMethod { LLA, Lasso };

struct BicPoint {
  double lambda = 0.0;
  double bic = 0.0;
  int df = 0;
};

struct TuningResult {
  double lambda_star = 0.0;
  FitResult fit;
  std::vector<BicPoint> bic_path;      // converged, non-degenerate fits only
  std::optional<FitResult> pilot;      // LLA only; computed exactly once
  int fits_attempted = 0;
  int fits_failed = 0;
};

// Fits the grid and returns the lambda minimizing BIC; ties break toward the
// larger lambda (the sparser model). Failed fits are excluded from the path.
//
// With LLA weights the all-zero fit is not stationary at lambda_max whenever
// a pilot coefficient exceeds it (its weight is already on the decaying SCAD
// branch there), so the grid would never offer the empty model. The LLA
// branch therefore evaluates one extra endpoint at
// max(lambda_max, ||pilot||_inf), where every weight sits on the first
// branch; it is selected only when it strictly beats every grid point.
inline TuningResult select_lambda(const Dataset& data, const LossSpec& loss, TuneMethod method,
                                  const LambdaGrid& grid, const SolveOptions& opts = {},
                                  double scad_a = 3.7) {
  TuningResult out;

  if (method == TuneMethod::LLA) {
    FitResult pilot = fit_unpenalized(data, loss, opts);
    ++out.fits_attempted;
    if (!pilot.converged) ++out.fits_failed;
    out.pilot = std::move(pilot);
  }

  double best_bic = std::numeric_limits<double>::infinity();
  bool have_best = false;
  const auto try_lambda = [&](double lambda) {
    const PenaltyWeights w = method == TuneMethod::LLA
                                 ? lla_weights(ScadParams(lambda, scad_a), out.pilot->beta)
                                 : lasso_weights(lambda, data.p());
    ++out.fits_attempted;
    FitResult fit;
    try {
      fit = fit_penalized(data, loss, w, opts);
    } catch (const std::runtime_error&) {
      ++out.fits_failed;
      return;
    }
    if (!fit.converged) {
      ++out.fits_failed;
      return;
    }
    const BicScore score = bic_score(data, loss, fit.beta, opts.zero_tol);
    if (!std::isfinite(score.bic)) return;  // degenerate exact fit
    out.bic_path.push_back({lambda, score.bic, score.df});
    // descending order + strict improvement = ties resolve to the larger lambda
    if (score.bic < best_bic) {
      best_bic = score.bic;
      out.lambda_star = lambda;
      out.fit = std::move(fit);
      have_best = true;
    }
  };

  for (const double lambda : grid.values) try_lambda(lambda);
  if (method == TuneMethod::LLA) {
    Eigen::VectorXd phi0(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) phi0[i] = loss_phi(loss, data.y[i]);
    const double grad_max =
        (data.X.transpose() * phi0).cwiseAbs().maxCoeff() / static_cast<double>(data.n());
    const double sparse_end =
        std::max(grad_max, out.pilot->beta.cwiseAbs().maxCoeff()) * (1.0 + 1e-9);
    if (sparse_end > grid.values.front()) try_lambda(sparse_end);
  }
  std::sort(out.bic_path.begin(), out.bic_path.end(),
            [](const BicPoint& a, const BicPoint& b) { return a.lambda > b.lambda; });

  if (!have_best)
    throw std::runtime_error("select_lambda: no lambda produced a usable fit");
  return out;
}

}  // namespace mest
