#pragma once

// Minimizes Q(beta) = (1/n) sum_i rho(y_i - x_i' beta) + sum_j w_j |beta_j|
// for any loss in the family and nonnegative weights, with a certified
// optimality residual.
//
// Algorithm: operator splitting on z = y - X beta. The beta-update is a
// weighted-L1 quadratic subproblem solved by cyclic coordinate descent over a
// cached Gram matrix; the z-update applies the loss prox coordinatewise; the
// scaled dual ascends on the coupling constraint. Optimality is certified by
// interval arithmetic on the coordinatewise subgradient sum, so kinked losses
// (LAD, quantile) additionally get a vertex polish that lands the iterate
// exactly on the interpolating solution once the active set has settled.

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mest/data.hpp"
#include "mest/losses.hpp"
#include "mest/penalties.hpp"

namespace mest {

struct SolveOptions {
  double tol = 1e-8;        // on the KKT residual
  int max_iter = 20000;
  double admm_rho = 1.0;    // initial penalty parameter, auto-rescaled
  double zero_tol = 1e-6;   // hard-zeroing threshold for coefficients
  Eigen::VectorXd beta0;    // optional initial point (empty = zeros)
};

struct FitResult {
  Eigen::VectorXd beta;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline double penalized_objective(const Dataset& data, const LossSpec& loss,
                                  const PenaltyWeights& weights,
                                  const Eigen::VectorXd& beta) {
  const Eigen::VectorXd r = data.y - data.X * beta;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) acc += loss_value(loss, r[i]);
  acc /= static_cast<double>(data.n());
  for (Eigen::Index j = 0; j < beta.size(); ++j) acc += weights.w[j] * std::abs(beta[j]);
  return acc;
}

// Max over coordinates of the distance from 0 to the subgradient-sum interval
//   (1/n) sum_i (-x_ij) * [phi-(r_i), phi+(r_i)]  +  w_j * d|beta_j|.
// Residuals within a small floating-point band of a kink are classified as
// sitting on the kink, since exact interpolation is not representable.
inline double kkt_residual(const Dataset& data, const LossSpec& loss,
                           const PenaltyWeights& weights, const Eigen::VectorXd& beta) {
  if (weights.size() != data.p() || beta.size() != data.p())
    throw std::invalid_argument("kkt_residual: inconsistent shapes");
  const Eigen::Index n = data.n(), p = data.p();
  const Eigen::VectorXd r = data.y - data.X * beta;
  const bool kinked = loss_has_kink(loss);
  const double kink_tol = 1e-9 * (1.0 + data.y.cwiseAbs().maxCoeff());

  Eigen::VectorXd glo(n), ghi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ri = (kinked && std::abs(r[i]) <= kink_tol) ? 0.0 : r[i];
    const SubgradientInterval g = loss_subgradient(loss, ri);
    glo[i] = g.lo;
    ghi[i] = g.hi;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    double lo = 0.0, hi = 0.0;
    const auto col = data.X.col(j);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = col[i];
      if (x >= 0.0) {
        lo -= x * ghi[i];
        hi -= x * glo[i];
      } else {
        lo -= x * glo[i];
        hi -= x * ghi[i];
      }
    }
    lo *= inv_n;
    hi *= inv_n;
    if (beta[j] > 0.0) {
      lo += weights.w[j];
      hi += weights.w[j];
    } else if (beta[j] < 0.0) {
      lo -= weights.w[j];
      hi -= weights.w[j];
    } else {
      lo -= weights.w[j];
      hi += weights.w[j];
    }
    const double d = lo > 0.0 ? lo : (hi < 0.0 ? -hi : 0.0);
    worst = std::max(worst, d);
  }
  return worst;
}

namespace detail {

inline Eigen::VectorXd hard_zero(Eigen::VectorXd beta, double zero_tol) {
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (std::abs(beta[j]) <= zero_tol) beta[j] = 0.0;
  return beta;
}

// The per-coordinate interval certificate may pick a different subgradient
// per coordinate, which is necessary but not sufficient at kinked losses: a
// vertex adjacent to the optimum can pass it. Acceptance therefore also
// verifies one common dual vector: the subgradients on the kink rows are free
// inside their interval, every other row is pinned at its derivative, and
// stationarity must hold simultaneously for all coordinates.
inline bool joint_dual_feasible(const Dataset& data, const LossSpec& loss,
                                const PenaltyWeights& weights, const Eigen::VectorXd& beta,
                                double tol) {
  const Eigen::Index n = data.n(), p = data.p();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::VectorXd r = data.y - data.X * beta;
  const double kink_tol = 1e-9 * (1.0 + data.y.cwiseAbs().maxCoeff());

  std::vector<Eigen::Index> free_cols, kink_rows;
  for (Eigen::Index j = 0; j < p; ++j)
    if (beta[j] != 0.0 || weights.w[j] == 0.0) free_cols.push_back(j);
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(r[i]) <= kink_tol) kink_rows.push_back(i);
  const Eigen::Index nf = static_cast<Eigen::Index>(free_cols.size());
  const Eigen::Index na = static_cast<Eigen::Index>(kink_rows.size());

  Eigen::VectorXd phi_fixed(n);
  for (Eigen::Index i = 0; i < n; ++i) phi_fixed[i] = loss_phi(loss, r[i]);
  for (const Eigen::Index i : kink_rows) phi_fixed[i] = 0.0;
  const Eigen::VectorXd fixed_grad = inv_n * (data.X.transpose() * phi_fixed);

  const SubgradientInterval box = loss_subgradient(loss, 0.0);
  const double mid = 0.5 * (box.lo + box.hi);

  Eigen::VectorXd phi_free = Eigen::VectorXd::Zero(na);
  if (nf > 0) {
    // stationarity on the free coordinates, centered on the interval midpoint
    Eigen::MatrixXd B(nf, na);
    Eigen::VectorXd c(nf);
    for (Eigen::Index f = 0; f < nf; ++f) {
      const Eigen::Index j = free_cols[static_cast<std::size_t>(f)];
      double target = 0.0;
      if (beta[j] > 0.0) target = weights.w[j];
      else if (beta[j] < 0.0) target = -weights.w[j];
      c[f] = target - fixed_grad[j];
      for (Eigen::Index a = 0; a < na; ++a) {
        B(f, a) = inv_n * data.X(kink_rows[static_cast<std::size_t>(a)], j);
        c[f] -= B(f, a) * mid;
      }
    }
    if (na > 0) {
      phi_free = B.completeOrthogonalDecomposition().solve(c).array() + mid;
      if (!phi_free.allFinite()) return false;
      for (Eigen::Index a = 0; a < na; ++a)
        if (phi_free[a] < box.lo - 1e-9 || phi_free[a] > box.hi + 1e-9) return false;
      if ((B * (phi_free.array() - mid).matrix() - c).cwiseAbs().maxCoeff() > tol) return false;
    } else if (c.cwiseAbs().maxCoeff() > tol) {
      return false;
    }
  } else {
    phi_free.setConstant(mid);
  }

  // inactive coordinates: |(1/n) sum_i x_ij phi_i| <= w_j
  for (Eigen::Index j = 0; j < p; ++j) {
    if (beta[j] != 0.0 || weights.w[j] == 0.0) continue;
    double g = fixed_grad[j];
    for (Eigen::Index a = 0; a < na; ++a)
      g += inv_n * data.X(kink_rows[static_cast<std::size_t>(a)], j) * phi_free[a];
    if (std::abs(g) > weights.w[j] + tol) return false;
  }
  return true;
}

// Vertex polish for kinked losses. A generic minimizer interpolates one data
// point per free coordinate (nonzero, or unpenalized). Re-solves that square
// interpolation system at full precision so the KKT intervals open up. The
// z-update's exact zeros are the splitting iterate's own guess of the
// interpolation set and identify it long before numeric convergence; rows are
// drawn from that hint first, ordered by |r_i|, padded by |r_i| if short.
// Returns an empty vector when no plausible vertex exists.
inline Eigen::VectorXd polish_vertex(const Dataset& data, const PenaltyWeights& weights,
                                     const Eigen::VectorXd& candidate,
                                     const std::vector<Eigen::Index>& active_hint) {
  const Eigen::Index n = data.n();
  std::vector<Eigen::Index> free_cols;
  for (Eigen::Index j = 0; j < candidate.size(); ++j)
    if (candidate[j] != 0.0 || weights.w[j] == 0.0) free_cols.push_back(j);
  const Eigen::Index s = static_cast<Eigen::Index>(free_cols.size());
  if (s == 0 || s > n) return {};

  const Eigen::VectorXd r = data.y - data.X * candidate;
  const auto by_residual = [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(r[a]) < std::abs(r[b]);
  };

  std::vector<Eigen::Index> rows = active_hint;
  std::sort(rows.begin(), rows.end(), by_residual);
  if (static_cast<Eigen::Index>(rows.size()) > s) rows.resize(static_cast<std::size_t>(s));
  if (static_cast<Eigen::Index>(rows.size()) < s) {
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    for (const Eigen::Index i : rows) taken[static_cast<std::size_t>(i)] = 1;
    std::vector<Eigen::Index> rest;
    rest.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
    const std::size_t need = static_cast<std::size_t>(s) - rows.size();
    std::partial_sort(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need), rest.end(),
                      by_residual);
    rows.insert(rows.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need));
  }

  Eigen::MatrixXd M(s, s);
  Eigen::VectorXd rhs(s);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) M(a, b) = data.X(rows[static_cast<std::size_t>(a)], free_cols[static_cast<std::size_t>(b)]);
    rhs[a] = data.y[rows[static_cast<std::size_t>(a)]];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) return {};
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return {};

  Eigen::VectorXd out = Eigen::VectorXd::Zero(candidate.size());
  for (Eigen::Index b = 0; b < s; ++b) out[free_cols[static_cast<std::size_t>(b)]] = sol[b];
  return out;
}

// Exhaustive vertex search over subsets of the smallest-residual rows. Only
// viable for small bases; each candidate must not worsen the objective and
// must pass the joint dual certificate via the supplied acceptor.
template <class Consider>
inline bool rescue_degenerate_vertex(const Dataset& data, const LossSpec& loss,
                                     const PenaltyWeights& weights,
                                     const Eigen::VectorXd& candidate, const SolveOptions& opts,
                                     Consider&& consider, int it) {
  const Eigen::Index n = data.n(), p = data.p();
  std::vector<Eigen::Index> free_cols;
  for (Eigen::Index j = 0; j < p; ++j)
    if (candidate[j] != 0.0 || weights.w[j] == 0.0) free_cols.push_back(j);
  const int s = static_cast<int>(free_cols.size());
  if (s < 1 || s > 12 || s > n) return false;

  const Eigen::VectorXd r = data.y - data.X * candidate;
  const int pool_size = static_cast<int>(std::min<Eigen::Index>(n, s + 4));
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  std::partial_sort(pool.begin(), pool.begin() + pool_size, pool.end(),
                    [&](Eigen::Index a, Eigen::Index b) { return std::abs(r[a]) < std::abs(r[b]); });
  pool.resize(static_cast<std::size_t>(pool_size));

  const double obj_ref = penalized_objective(data, loss, weights, candidate);
  Eigen::MatrixXd M(s, s);
  Eigen::VectorXd rhs(s);
  std::vector<int> pick(static_cast<std::size_t>(s));
  int tried = 0;
  for (std::uint32_t mask = 0; mask < (1u << pool_size) && tried < 300; ++mask) {
    if (std::popcount(mask) != s) continue;
    ++tried;
    int a = 0;
    for (int b = 0; b < pool_size; ++b)
      if (mask & (1u << b)) pick[static_cast<std::size_t>(a++)] = b;
    for (int row = 0; row < s; ++row) {
      const Eigen::Index i = pool[static_cast<std::size_t>(pick[static_cast<std::size_t>(row)])];
      for (int col = 0; col < s; ++col) M(row, col) = data.X(i, free_cols[static_cast<std::size_t>(col)]);
      rhs[row] = data.y[i];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) continue;
    Eigen::VectorXd vertex = Eigen::VectorXd::Zero(p);
    for (int col = 0; col < s; ++col) vertex[free_cols[static_cast<std::size_t>(col)]] = sol[col];
    vertex = hard_zero(std::move(vertex), opts.zero_tol);
    if (penalized_objective(data, loss, weights, vertex) >
        obj_ref + 1e-9 * (1.0 + std::abs(obj_ref)))
      continue;
    if (consider(vertex, it)) return true;
  }
  return false;
}

}  // namespace detail

inline FitResult fit_penalized(const Dataset& data, const LossSpec& loss,
                               const PenaltyWeights& weights, const SolveOptions& opts = {}) {
  if (weights.size() != data.p())
    throw std::invalid_argument("fit_penalized: weights length must equal p");
  if (!(opts.tol > 0.0) || opts.max_iter < 1 || !(opts.admm_rho > 0.0) || !(opts.zero_tol >= 0.0))
    throw std::invalid_argument("fit_penalized: invalid solve options");

  const Eigen::Index n = data.n(), p = data.p();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd G = data.X.transpose() * data.X;
  const Eigen::VectorXd Gdiag = G.diagonal();

  // Direct beta-update factorization for the unpenalized case.
  const bool no_penalty = (weights.w.maxCoeff() == 0.0);
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool use_llt = false;
  if (no_penalty) {
    llt.compute(G);
    use_llt = (llt.info() == Eigen::Success);
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (opts.beta0.size() == p) beta = opts.beta0;
  Eigen::VectorXd xb = data.X * beta;
  Eigen::VectorXd z = data.y - xb;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd gb = G * beta;

  double rho = opts.admm_rho;
  constexpr double kRelax = 1.7;
  const bool kinked = loss_has_kink(loss);

  FitResult best;
  best.beta = detail::hard_zero(beta, opts.zero_tol);
  best.objective = penalized_objective(data, loss, weights, best.beta);
  best.kkt_residual = std::numeric_limits<double>::infinity();

  auto consider = [&](const Eigen::VectorXd& cand, int it) -> bool {
    const double obj = penalized_objective(data, loss, weights, cand);
    if (obj < best.objective) {
      best.beta = cand;
      best.objective = obj;
      best.iterations = it;
    }
    const double kkt = kkt_residual(data, loss, weights, cand);
    if (kkt <= opts.tol &&
        (!kinked || detail::joint_dual_feasible(data, loss, weights, cand, opts.tol))) {
      best.beta = cand;
      best.objective = obj;
      best.kkt_residual = kkt;
      best.iterations = it;
      best.converged = true;
      return true;
    }
    return false;
  };

  int it = 0;
  while (it < opts.max_iter) {
    ++it;

    // beta-update: argmin sum w_j|b_j| + (rho/2) ||X b - v||^2, v = y - z - u
    const Eigen::VectorXd bvec = data.X.transpose() * (data.y - z - u);
    if (use_llt) {
      beta = llt.solve(bvec);
      gb.noalias() = G * beta;
    } else {
      const double sweep_tol = 1e-12 * (1.0 + beta.cwiseAbs().maxCoeff());
      for (int sweep = 0; sweep < 100; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
          if (Gdiag[j] == 0.0) {
            if (beta[j] != 0.0) {
              gb.noalias() -= G.col(j) * beta[j];
              beta[j] = 0.0;
            }
            continue;
          }
          const double cj = bvec[j] - (gb[j] - Gdiag[j] * beta[j]);
          const double bj = detail::soft_threshold(cj, weights.w[j] / rho) / Gdiag[j];
          const double delta = bj - beta[j];
          if (delta != 0.0) {
            gb.noalias() += G.col(j) * delta;
            beta[j] = bj;
            max_change = std::max(max_change, std::abs(delta));
          }
        }
        if (max_change <= sweep_tol) break;
      }
    }
    xb.noalias() = data.X * beta;

    // z-update on the over-relaxed point, then dual ascent
    const Eigen::VectorXd z_prev = z;
    const Eigen::VectorXd ax = kRelax * xb + (1.0 - kRelax) * (data.y - z_prev);
    const double prox_t = inv_n / rho;
    for (Eigen::Index i = 0; i < n; ++i)
      z[i] = loss_prox(loss, data.y[i] - ax[i] - u[i], prox_t);
    u += ax + z - data.y;

    if (it % 10 == 0 || it == opts.max_iter) {
      if (!beta.allFinite() || !z.allFinite() || !u.allFinite())
        throw std::runtime_error("fit_penalized: non-finite value encountered");

      const Eigen::VectorXd cand = detail::hard_zero(beta, opts.zero_tol);
      if (consider(cand, it)) return best;
      if (kinked) {
        std::vector<Eigen::Index> z_zero_rows;
        for (Eigen::Index i = 0; i < n; ++i)
          if (z[i] == 0.0) z_zero_rows.push_back(i);
        Eigen::VectorXd pol = detail::polish_vertex(data, weights, cand, z_zero_rows);
        if (pol.size() == p) {
          pol = detail::hard_zero(std::move(pol), opts.zero_tol);
          const double obj_p = penalized_objective(data, loss, weights, pol);
          if (obj_p <= best.objective + 1e-9 * (1.0 + std::abs(best.objective)) &&
              consider(pol, it))
            return best;
        }
        // Near-degenerate instances leave the iterate wandering among vertices
        // whose objectives differ below solver resolution; enumerate the
        // plausible interpolation sets outright when the basis is small.
        if (it % 500 == 0 &&
            detail::rescue_degenerate_vertex(data, loss, weights, cand, opts, consider, it))
          return best;
      }

      // residual balancing for rho; frozen after a burn-in because a forever
      // moving rho sustains limit cycles on near-degenerate instances
      const double prim = (xb + z - data.y).norm();
      const double dual = rho * (data.X.transpose() * (z - z_prev)).norm();
      if (prim > 0.0 && dual > 0.0) {
        const double ratio = prim / dual;
        if (it <= 1000 || ratio > 25.0 || ratio < 0.04) {
          const double f = std::clamp(std::sqrt(ratio), 0.5, 2.0);
          if (f != 1.0 && rho * f > 1e-8 && rho * f < 1e8) {
            rho *= f;
            u /= f;
          }
        }
      }
    }
  }

  best.iterations = opts.max_iter;
  best.kkt_residual = kkt_residual(data, loss, weights, best.beta);
  best.converged =
      best.kkt_residual <= opts.tol &&
      (!kinked || detail::joint_dual_feasible(data, loss, weights, best.beta, opts.tol));
  return best;
}

// Pilot fit: the penalized problem with zero weights.
inline FitResult fit_unpenalized(const Dataset& data, const LossSpec& loss,
                                 const SolveOptions& opts = {}) {
  if (data.p() > data.n())
    std::cerr << "mest: warning: unpenalized fit with p > n is ill-posed\n";
  return fit_penalized(data, loss, PenaltyWeights::zero(data.p()), opts);
}

// Infeasible benchmark: unpenalized fit on the given support only, zeros
// elsewhere. Support indices are 0-based, unique, in range.
inline FitResult fit_oracle(const Dataset& data, const LossSpec& loss,
                            std::vector<Eigen::Index> support, const SolveOptions& opts = {}) {
  if (support.empty()) throw std::invalid_argument("fit_oracle: support must be nonempty");
  std::sort(support.begin(), support.end());
  if (std::adjacent_find(support.begin(), support.end()) != support.end())
    throw std::invalid_argument("fit_oracle: duplicate support index");
  if (support.front() < 0 || support.back() >= data.p())
    throw std::invalid_argument("fit_oracle: support index out of range");

  Eigen::MatrixXd Xs(data.n(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) Xs.col(static_cast<Eigen::Index>(k)) = data.X.col(support[k]);
  const Dataset sub(std::move(Xs), data.y);

  FitResult fit = fit_unpenalized(sub, loss, opts);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(data.p());
  for (std::size_t k = 0; k < support.size(); ++k) beta[support[k]] = fit.beta[static_cast<Eigen::Index>(k)];
  fit.beta = std::move(beta);
  // objective/KKT reported against the full problem
  const PenaltyWeights w0 = PenaltyWeights::zero(data.p());
  fit.objective = penalized_objective(data, loss, w0, fit.beta);
  return fit;
}

}  // namespace mest
