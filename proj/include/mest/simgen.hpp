#pragma once

// Synthetic data generation: AR(1)-correlated Gaussian designs, the fixed
// sparse coefficient vector (nonzeros first), and the three error laws, all
// deterministically seeded. A replicate is a pure function of
// (config, replicate_index): the substream seed is seed XOR
// splitmix64(replicate_index), and the design/error streams are tagged
// sub-seeds of that substream.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mest/data.hpp"
#include "mest/distributions.hpp"
#include "mest/rng.hpp"

namespace mest {

// Dimension rule p = [2 sqrt(n)] with [.] = round half up, which reproduces
// p = 28, 45, 53 at n = 200, 500, 700.
inline Eigen::Index default_dimension(Eigen::Index n) {
  return static_cast<Eigen::Index>(std::floor(2.0 * std::sqrt(double(n)) + 0.5));
}

struct ScenarioConfig {
  Eigen::Index n = 200;
  Eigen::Index p = 0;  // 0 = derive as default_dimension(n)
  double rho = 0.5;
  Eigen::VectorXd beta_nonzero = (Eigen::VectorXd(4) << -2.0, 2.5, 3.0, -1.0).finished();
  ErrorDist dist = ErrorDist::std_normal();
  std::uint64_t seed = 0;
  int replicates = 500;

  Eigen::Index resolved_p() const { return p > 0 ? p : default_dimension(n); }
  Eigen::Index k() const { return beta_nonzero.size(); }

  void validate() const {
    if (n < 1) throw std::invalid_argument("scenario needs n >= 1");
    if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("scenario needs |rho| < 1");
    if (resolved_p() < k())
      throw std::invalid_argument("dimension must be at least the number of nonzero coefficients");
    if (replicates < 0) throw std::invalid_argument("replicates must be nonnegative");
  }

  std::string scenario_id() const {
    return "n" + std::to_string(n) + "_" + dist.name();
  }
};

inline Eigen::MatrixXd ar1_covariance(Eigen::Index p, double rho) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("ar1 needs |rho| < 1");
  if (p < 1) throw std::invalid_argument("ar1 needs p >= 1");
  Eigen::MatrixXd S(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) S(i, j) = std::pow(rho, double(std::abs(i - j)));
  return S;
}

// Rows i.i.d. N(0, Sigma) via the lower Cholesky factor applied to standard
// normals drawn row-major.
inline Eigen::MatrixXd gen_design(Eigen::Index n, Eigen::Index p, double rho, std::uint64_t seed) {
  const Eigen::MatrixXd S = ar1_covariance(p, rho);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("ar1 covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  Rng rng(seed);
  Eigen::MatrixXd Z(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) Z(i, j) = rng.normal();
  return Z * L.transpose();
}

inline Eigen::VectorXd gen_errors(Eigen::Index n, const ErrorDist& dist, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd e(n);
  for (Eigen::Index i = 0; i < n; ++i) e[i] = dist.sample(rng);
  return e;
}

namespace detail {
constexpr std::uint64_t kDesignTag = 0xDE51ULL;
constexpr std::uint64_t kErrorTag = 0xE44ULL;
constexpr std::uint64_t kHoldoutTag = 0x401DULL;
}  // namespace detail

inline std::uint64_t design_seed(const ScenarioConfig& c, int replicate_index) {
  return tagged_seed(substream_seed(c.seed, static_cast<std::uint64_t>(replicate_index)),
                     detail::kDesignTag);
}

inline std::uint64_t error_seed(const ScenarioConfig& c, int replicate_index) {
  return tagged_seed(substream_seed(c.seed, static_cast<std::uint64_t>(replicate_index)),
                     detail::kErrorTag);
}

struct GeneratedData {
  Dataset data;
  Eigen::VectorXd beta0;                // full-length truth
  std::vector<Eigen::Index> support;    // indices of nonzero coefficients (0-based)
};

inline GeneratedData gen_dataset(const ScenarioConfig& config, int replicate_index) {
  config.validate();
  const Eigen::Index p = config.resolved_p(), k = config.k();
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(p);
  beta0.head(k) = config.beta_nonzero;

  Eigen::MatrixXd X = gen_design(config.n, p, config.rho, design_seed(config, replicate_index));
  const Eigen::VectorXd e = gen_errors(config.n, config.dist, error_seed(config, replicate_index));
  Eigen::VectorXd y = X * beta0 + e;

  std::vector<Eigen::Index> support(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) support[static_cast<std::size_t>(j)] = j;
  return {Dataset(std::move(X), std::move(y)), std::move(beta0), std::move(support)};
}

// Fresh draw from the same law, independent of the fitting replicate; used by
// the optional holdout prediction-error diagnostic.
inline GeneratedData gen_holdout(const ScenarioConfig& config, int replicate_index) {
  ScenarioConfig shifted = config;
  shifted.seed = tagged_seed(substream_seed(config.seed, static_cast<std::uint64_t>(replicate_index)),
                             detail::kHoldoutTag);
  return gen_dataset(shifted, 0);
}

// CSV dump with header x1..xp,y; one file per replicate on demand.
inline void dump_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[64];
  for (Eigen::Index j = 0; j < data.p(); ++j) out << "x" << (j + 1) << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g,", data.X(i, j));
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g\n", data.y[i]);
    out << buf;
  }
}

}  // namespace mest
