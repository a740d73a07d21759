#pragma once

// Small statistical helpers shared by the diagnostics and the test suites.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mest {

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// One-sample Kolmogorov-Smirnov statistic against the standard normal.
inline double ks_statistic_vs_normal(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("ks statistic needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i]);
    ks = std::max(ks, std::max((double(i) + 1.0) / n - f, f - double(i) / n));
  }
  return ks;
}

}  // namespace mest
