#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace stormrain {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample variance (n-1 denominator); 0 for a single observation.
inline double sample_variance(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("variance of empty sample");
  if (v.size() == 1) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double sample_sd(const std::vector<double>& v) {
  return std::sqrt(sample_variance(v));
}

// Median; an even sample size averages the two central order statistics.
inline double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Order-statistic quantile (no interpolation): q_p = x_(ceil(p n)). Exactly
// commutes with monotone transforms, which the mm/log summary contract needs.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("quantile requires p in (0,1)");
  }
  const double k = std::ceil(p * static_cast<double>(sorted.size()));
  const std::size_t idx =
      static_cast<std::size_t>(std::max(1.0, k)) - 1;
  return sorted[std::min(idx, sorted.size() - 1)];
}

inline double quantile_of(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

// Centered 3-term moving average; the first and last entry keep their raw
// value (no full window exists there).
inline std::vector<double> smooth3(const std::vector<double>& v) {
  std::vector<double> out(v);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    out[i] = (v[i - 1] + v[i] + v[i + 1]) / 3.0;
  }
  return out;
}

}  // namespace stormrain
