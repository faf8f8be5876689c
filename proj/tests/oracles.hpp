#pragma once

// Independent reference implementations used only by the test suite. These
// deliberately use different algorithms from the library (quadratic scans,
// series expansions) so that agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "stormrain/dbscan.hpp"

namespace oracles {

// Brute-force density-reachability clustering: O(n^2) pairwise distances,
// union-find over core-core pairs, nearest-core assignment for border points
// (ties by lowest index). Same contract as stormrain::dbscan, different
// mechanics.
inline std::vector<int> brute_dbscan(const std::vector<stormrain::ScanPoint>& pts,
                                     double radius, int min_points) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> labels(n, -1);
  if (n == 0) return labels;
  const double r2 = radius * radius;
  auto d2 = [&](int i, int j) {
    const auto& a = pts[i];
    const auto& b = pts[j];
    return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
           (a.t - b.t) * (a.t - b.t);
  };
  std::vector<int> degree(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (d2(i, j) <= r2) ++degree[i];
    }
  }
  std::vector<bool> core(n);
  for (int i = 0; i < n; ++i) core[i] = degree[i] >= min_points;

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (int j = i + 1; j < n; ++j) {
      if (core[j] && d2(i, j) <= r2) parent[find(i)] = find(j);
    }
  }
  // Canonical labels: 0-based by order of first appearance over point index.
  std::vector<int> canon(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const int root = find(i);
    if (canon[root] == -1) canon[root] = next++;
    labels[i] = canon[root];
  }
  for (int i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    int pick = -1;
    for (int j = 0; j < n; ++j) {
      if (!core[j]) continue;
      const double d = d2(i, j);
      if (d <= r2 && d < best) {
        best = d;
        pick = j;
      }
    }
    if (pick >= 0) labels[i] = labels[pick];
  }
  return labels;
}

// Relabels a clustering to 0..k-1 in order of first appearance so two
// labelings can be compared as partitions.
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::vector<int> out(labels.size(), -1);
  std::unordered_map<int, int> remap;
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const auto [it, inserted] = remap.try_emplace(labels[i], next);
    if (inserted) ++next;
    out[i] = it->second;
  }
  return out;
}

// Regularized lower incomplete gamma P(a, x) via series / continued fraction.
inline double gamma_cdf_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_cdf_p domain");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - gln) * h;
  return 1.0 - q;
}

// Kolmogorov-Smirnov statistic of a sample against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    ks = std::max(ks, std::fabs(F - static_cast<double>(i) / n));
    ks = std::max(ks, std::fabs(static_cast<double>(i + 1) / n - F));
  }
  return ks;
}

}  // namespace oracles
