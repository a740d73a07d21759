#pragma once

// Convex loss family for robust regression: LAD, quantile (check loss),
// Huber, Lq and least squares. Each loss provides its value, the
// left/right-derivative interval, the proximal operator, and the population
// functionals (gamma, sigma^2) that drive the asymptotic variance.
//
// Scaling convention: LeastSquares is x^2/2 and Lq is |x|^q / q, so that
// Lq(1) == LAD and Lq(2) == LeastSquares hold pointwise and the least-squares
// prox is v/(1+t). Argmins are unaffected by this scaling.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "mest/distributions.hpp"
#include "mest/rng.hpp"

namespace mest {

enum class LossKind { LAD, Quantile, Huber, Lq, LeastSquares };

struct LossSpec {
  LossKind kind = LossKind::LAD;
  double alpha = 0.0;  // Quantile only, in (0,1)
  double c = 0.0;      // Huber only, > 0
  double q = 0.0;      // Lq only, in [1,2]

  static LossSpec lad() { return {LossKind::LAD, 0.0, 0.0, 0.0}; }

  static LossSpec quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("quantile level must lie in (0,1)");
    return {LossKind::Quantile, alpha, 0.0, 0.0};
  }

  static LossSpec huber(double c) {
    if (!(c > 0.0) || !std::isfinite(c))
      throw std::invalid_argument("huber threshold must be a positive real");
    return {LossKind::Huber, 0.0, c, 0.0};
  }

  static LossSpec lq(double q) {
    if (!(q >= 1.0 && q <= 2.0))
      throw std::invalid_argument("lq exponent must lie in [1,2]");
    return {LossKind::Lq, 0.0, 0.0, q};
  }

  static LossSpec least_squares() { return {LossKind::LeastSquares, 0.0, 0.0, 0.0}; }

  // Accepts "lad", "ls", "huber:<c>", "quantile:<alpha>", "lq:<q>".
  static LossSpec parse(const std::string& token) {
    const auto colon = token.find(':');
    const std::string head = token.substr(0, colon);
    const bool has_arg = colon != std::string::npos;
    const double arg = has_arg ? std::stod(token.substr(colon + 1)) : 0.0;
    if (head == "lad" && !has_arg) return lad();
    if (head == "ls" && !has_arg) return least_squares();
    if (head == "huber" && has_arg) return huber(arg);
    if (head == "quantile" && has_arg) return quantile(arg);
    if (head == "lq" && has_arg) return lq(arg);
    throw std::invalid_argument("unknown loss: " + token);
  }

  std::string name() const {
    switch (kind) {
      case LossKind::LAD: return "lad";
      case LossKind::Quantile: return "quantile:" + std::to_string(alpha);
      case LossKind::Huber: return "huber:" + std::to_string(c);
      case LossKind::Lq: return "lq:" + std::to_string(q);
      case LossKind::LeastSquares: return "ls";
    }
    return "?";
  }
};

// Closed interval [phi_-(r), phi_+(r)]; a point wherever the loss is
// differentiable.
struct SubgradientInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
  double distance_to_zero() const {
    if (lo > 0.0) return lo;
    if (hi < 0.0) return -hi;
    return 0.0;
  }
};

inline double loss_value(const LossSpec& s, double r) {
  switch (s.kind) {
    case LossKind::LAD:
      return std::abs(r);
    case LossKind::Quantile:
      return r >= 0.0 ? s.alpha * r : -(1.0 - s.alpha) * r;
    case LossKind::Huber: {
      const double a = std::abs(r);
      return a <= s.c ? 0.5 * r * r : s.c * a - 0.5 * s.c * s.c;
    }
    case LossKind::Lq:
      if (s.q == 1.0) return std::abs(r);
      if (s.q == 2.0) return 0.5 * r * r;
      return std::pow(std::abs(r), s.q) / s.q;
    case LossKind::LeastSquares:
      return 0.5 * r * r;
  }
  return 0.0;
}

inline SubgradientInterval loss_subgradient(const LossSpec& s, double r) {
  switch (s.kind) {
    case LossKind::LAD:
      if (r > 0.0) return {1.0, 1.0};
      if (r < 0.0) return {-1.0, -1.0};
      return {-1.0, 1.0};
    case LossKind::Quantile:
      if (r > 0.0) return {s.alpha, s.alpha};
      if (r < 0.0) return {-(1.0 - s.alpha), -(1.0 - s.alpha)};
      return {-(1.0 - s.alpha), s.alpha};
    case LossKind::Huber: {
      const double d = r > s.c ? s.c : (r < -s.c ? -s.c : r);
      return {d, d};
    }
    case LossKind::Lq: {
      if (s.q == 1.0) return loss_subgradient(LossSpec::lad(), r);
      if (r == 0.0) return {0.0, 0.0};
      const double d = std::pow(std::abs(r), s.q - 1.0) * (r > 0.0 ? 1.0 : -1.0);
      return {d, d};
    }
    case LossKind::LeastSquares:
      return {r, r};
  }
  return {0.0, 0.0};
}

// Fixed representative subgradient (the interval midpoint at kinks).
inline double loss_phi(const LossSpec& s, double r) {
  const SubgradientInterval g = loss_subgradient(s, r);
  return 0.5 * (g.lo + g.hi);
}

// True when the subgradient jumps at r = 0 (LAD, quantile, Lq with q = 1).
inline bool loss_has_kink(const LossSpec& s) {
  return s.kind == LossKind::LAD || s.kind == LossKind::Quantile ||
         (s.kind == LossKind::Lq && s.q == 1.0);
}

namespace detail {

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// argmin_z t |z|^q / q + (z-v)^2 / 2 for fractional q in (1,2), by safeguarded
// Newton on g(z) = z - v + t |z|^{q-1} sign(z). g is strictly increasing and
// the root shares the sign of v, so [0, |v|] brackets it.
inline double lq_prox_newton(double v, double t, double q) {
  if (v == 0.0) return 0.0;
  const double sign = v > 0.0 ? 1.0 : -1.0;
  const double a = std::abs(v);
  double lo = 0.0, hi = a;
  double z = a;  // Newton from the smooth side
  for (int it = 0; it < 200; ++it) {
    const double g = z - a + t * std::pow(z, q - 1.0);
    if (std::abs(g) <= 1e-12) return sign * z;
    if (g > 0.0) hi = z; else lo = z;
    const double dg = 1.0 + t * (q - 1.0) * std::pow(z, q - 2.0);
    double step = z - g / dg;
    if (!(step > lo && step < hi)) step = 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * a)
      return sign * 0.5 * (lo + hi);
    z = step;
  }
  throw std::runtime_error("lq prox newton did not converge");
}

}  // namespace detail

// argmin_z { t * rho(z) + (z - v)^2 / 2 }, t > 0.
inline double loss_prox(const LossSpec& s, double v, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("prox weight t must be positive");
  switch (s.kind) {
    case LossKind::LAD:
      return detail::soft_threshold(v, t);
    case LossKind::Quantile:
      // zero on the gap [-t(1-alpha), t*alpha], shifted identity outside
      if (v > t * s.alpha) return v - t * s.alpha;
      if (v < -t * (1.0 - s.alpha)) return v + t * (1.0 - s.alpha);
      return 0.0;
    case LossKind::Huber:
      // quadratic branch while |z| <= c, i.e. |v| <= c(1+t)
      if (std::abs(v) <= s.c * (1.0 + t)) return v / (1.0 + t);
      return v - t * s.c * (v > 0.0 ? 1.0 : -1.0);
    case LossKind::Lq:
      if (s.q == 1.0) return detail::soft_threshold(v, t);
      if (s.q == 2.0) return v / (1.0 + t);
      return detail::lq_prox_newton(v, t, s.q);
    case LossKind::LeastSquares:
      return v / (1.0 + t);
  }
  return v;
}

struct GammaSigma {
  double gamma = 0.0;   // slope of G(t) = E[phi(eps + t)] at t = 0
  double sigma2 = 0.0;  // E[phi(eps)^2]
};

// Population functionals of the loss under an error law. Closed forms where
// the derivative structure gives them directly; otherwise a seeded Monte
// Carlo estimate (1.2e6 draws) with a central difference for gamma. Rejects
// pairs where E[phi(eps)] is not zero.
inline GammaSigma gamma_sigma2(const LossSpec& s, const ErrorDist& dist) {
  switch (s.kind) {
    case LossKind::LAD:
      return {2.0 * dist.density_at_zero(), 1.0};
    case LossKind::LeastSquares:
      return {1.0, dist.variance()};
    case LossKind::Quantile:
      if (s.alpha == 0.5) return {dist.density_at_zero(), 0.25};
      break;
    case LossKind::Lq:
      if (s.q == 1.0) return gamma_sigma2(LossSpec::lad(), dist);
      if (s.q == 2.0) return gamma_sigma2(LossSpec::least_squares(), dist);
      break;
    case LossKind::Huber:
      break;
  }

  constexpr std::uint64_t kSeed = 0x6D6573745F6773ULL;
  constexpr int kDraws = 1'200'000;
  constexpr double h = 1e-3;
  Rng rng(kSeed);
  double mean = 0.0, mean_sq = 0.0, diff = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double e = dist.sample(rng);
    const double f = loss_phi(s, e);
    mean += f;
    mean_sq += f * f;
    diff += loss_phi(s, e + h) - loss_phi(s, e - h);
  }
  mean /= kDraws;
  mean_sq /= kDraws;
  diff /= kDraws;
  const double sd = std::sqrt(std::max(mean_sq - mean * mean, 0.0));
  if (std::abs(mean) > std::max(6.0 * sd / std::sqrt(double(kDraws)), 1e-4))
    throw std::invalid_argument("loss/error pair violates E[phi(eps)] = 0");
  return {diff / (2.0 * h), mean_sq};
}

}  // namespace mest
