#pragma once

// Error laws used by the simulation design: N(0,1), Student t with 5 degrees
// of freedom, and the contaminated normal 0.9 N(0,1) + 0.1 N(0,9).

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mest/rng.hpp"

namespace mest {

enum class ErrorKind { StdNormal, StudentT5, NormalMixture };

struct ErrorDist {
  ErrorKind kind = ErrorKind::StdNormal;

  static ErrorDist std_normal() { return {ErrorKind::StdNormal}; }
  static ErrorDist student_t5() { return {ErrorKind::StudentT5}; }
  static ErrorDist normal_mixture() { return {ErrorKind::NormalMixture}; }

  static ErrorDist parse(const std::string& token) {
    if (token == "normal") return std_normal();
    if (token == "t5") return student_t5();
    if (token == "mixture") return normal_mixture();
    throw std::invalid_argument("unknown error distribution: " + token);
  }

  const char* name() const {
    switch (kind) {
      case ErrorKind::StdNormal: return "normal";
      case ErrorKind::StudentT5: return "t5";
      case ErrorKind::NormalMixture: return "mixture";
    }
    return "?";
  }

  double variance() const {
    switch (kind) {
      case ErrorKind::StdNormal: return 1.0;
      case ErrorKind::StudentT5: return 5.0 / 3.0;  // nu/(nu-2)
      case ErrorKind::NormalMixture: return 0.9 * 1.0 + 0.1 * 9.0;
    }
    return 0.0;
  }

  double density_at_zero() const {
    const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    switch (kind) {
      case ErrorKind::StdNormal:
        return phi0;
      case ErrorKind::StudentT5: {
        // Gamma(3) / (sqrt(5 pi) Gamma(5/2))
        const double nu = 5.0;
        return std::tgamma(0.5 * (nu + 1.0)) /
               (std::sqrt(nu * std::numbers::pi) * std::tgamma(0.5 * nu));
      }
      case ErrorKind::NormalMixture:
        return 0.9 * phi0 + 0.1 * phi0 / 3.0;
    }
    return 0.0;
  }

  // One draw. Consumption order is fixed and documented per law:
  // t5 uses one normal then five normals for the chi-square; the mixture
  // uses one uniform (component pick) then one normal.
  double sample(Rng& rng) const {
    switch (kind) {
      case ErrorKind::StdNormal:
        return rng.normal();
      case ErrorKind::StudentT5: {
        const double z = rng.normal();
        const double c = rng.chi_square(5);
        return z / std::sqrt(c / 5.0);
      }
      case ErrorKind::NormalMixture: {
        const bool wide = rng.uniform01() < 0.1;
        const double z = rng.normal();
        return wide ? 3.0 * z : z;
      }
    }
    return 0.0;
  }
};

}  // namespace mest
