#pragma once

// Per-replicate and aggregated evaluation: estimation error, prediction
// error, and the zero-selection counts C / IC / CP.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mest/data.hpp"

namespace mest {

struct ReplicateRecord {
  double ee = 0.0;  // ||beta_hat - beta0||_2
  double pe = 0.0;  // n^-1 ||y - X beta_hat||^2
  int c = 0;        // correctly selected zeros
  int ic = 0;       // incorrectly selected zeros
};

struct MetricsSummary {
  double ee_median = 0.0;
  double pe_median = 0.0;
  double c_mean = 0.0;
  double ic_mean = 0.0;
  double cp = 0.0;  // c_mean / (p - k)
};

inline double estimation_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta0) {
  if (beta_hat.size() != beta0.size())
    throw std::invalid_argument("estimation_error: length mismatch");
  return (beta_hat - beta0).norm();
}

inline double prediction_error(const Dataset& data, const Eigen::VectorXd& beta_hat) {
  if (beta_hat.size() != data.p())
    throw std::invalid_argument("prediction_error: shape mismatch");
  return (data.y - data.X * beta_hat).squaredNorm() / static_cast<double>(data.n());
}

// c counts true zeros estimated as zero, ic counts true nonzeros estimated as
// zero; "zero" means |beta_j| <= zero_tol, matching the solver's hard-zeroing.
inline std::pair<int, int> selection_counts(const Eigen::VectorXd& beta_hat,
                                            const std::vector<Eigen::Index>& support,
                                            double zero_tol) {
  std::vector<bool> in_support(static_cast<std::size_t>(beta_hat.size()), false);
  for (const Eigen::Index j : support) {
    if (j < 0 || j >= beta_hat.size())
      throw std::invalid_argument("selection_counts: support index out of range");
    in_support[static_cast<std::size_t>(j)] = true;
  }
  int c = 0, ic = 0;
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    const bool zero = std::abs(beta_hat[j]) <= zero_tol;
    if (!zero) continue;
    if (in_support[static_cast<std::size_t>(j)]) ++ic; else ++c;
  }
  return {c, ic};
}

namespace detail {
// Even-count median is the mean of the central pair.
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}
}  // namespace detail

inline MetricsSummary aggregate(const std::vector<ReplicateRecord>& records, Eigen::Index p,
                                Eigen::Index k) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  if (p <= k) throw std::invalid_argument("aggregate: need p > k for CP");
  std::vector<double> ee, pe;
  ee.reserve(records.size());
  pe.reserve(records.size());
  double c_sum = 0.0, ic_sum = 0.0;
  for (const ReplicateRecord& r : records) {
    ee.push_back(r.ee);
    pe.push_back(r.pe);
    c_sum += r.c;
    ic_sum += r.ic;
  }
  MetricsSummary s;
  s.ee_median = detail::median(std::move(ee));
  s.pe_median = detail::median(std::move(pe));
  s.c_mean = c_sum / double(records.size());
  s.ic_mean = ic_sum / double(records.size());
  s.cp = s.c_mean / double(p - k);
  return s;
}

}  // namespace mest
