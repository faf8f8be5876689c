#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "stormrain/error.hpp"
#include "stormrain/types.hpp"

namespace stormrain {

// Point in standardized (x, y, time) space.
struct ScanPoint {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
};

// Maps strikes to (x, y, t) with each axis centered and scaled by its sample
// standard deviation (n-1 denominator).
inline std::vector<ScanPoint> standardize(const std::vector<LightningStrike>& strikes) {
  const std::size_t n = strikes.size();
  if (n < 2) throw DataError("standardize: need at least two strikes");
  double mx = 0, my = 0, mt = 0;
  for (const auto& s : strikes) {
    mx += s.x_m;
    my += s.y_m;
    mt += static_cast<double>(s.t);
  }
  mx /= n;
  my /= n;
  mt /= n;
  double vx = 0, vy = 0, vt = 0;
  for (const auto& s : strikes) {
    vx += (s.x_m - mx) * (s.x_m - mx);
    vy += (s.y_m - my) * (s.y_m - my);
    vt += (s.t - mt) * (s.t - mt);
  }
  const double den = static_cast<double>(n - 1);
  const double sx = std::sqrt(vx / den);
  const double sy = std::sqrt(vy / den);
  const double st = std::sqrt(vt / den);
  if (sx == 0.0) throw DataError("standardize: zero spread on the x axis");
  if (sy == 0.0) throw DataError("standardize: zero spread on the y axis");
  if (st == 0.0) throw DataError("standardize: zero spread on the time axis");
  std::vector<ScanPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = {(strikes[i].x_m - mx) / sx, (strikes[i].y_m - my) / sy,
              (strikes[i].t - mt) / st};
  }
  return out;
}

namespace detail {

// Uniform-box index over standardized points; boxes have edge = radius so a
// radius query only inspects the 27 surrounding boxes.
class BoxIndex {
 public:
  BoxIndex(const std::vector<ScanPoint>& pts, double radius)
      : pts_(pts), r_(radius) {
    boxes_.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      boxes_[key(pts[i])].push_back(static_cast<int>(i));
    }
  }

  // Indices within closed distance `radius` of pts[i], self included,
  // ascending order.
  std::vector<int> neighbors(int i) const {
    const ScanPoint& p = pts_[i];
    const double r2 = r_ * r_;
    std::vector<int> out;
    const std::int64_t bx = coord(p.x), by = coord(p.y), bt = coord(p.t);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dt = -1; dt <= 1; ++dt) {
          const auto it = boxes_.find(pack(bx + dx, by + dy, bt + dt));
          if (it == boxes_.end()) continue;
          for (const int j : it->second) {
            const ScanPoint& q = pts_[j];
            const double d2 = (p.x - q.x) * (p.x - q.x) +
                              (p.y - q.y) * (p.y - q.y) +
                              (p.t - q.t) * (p.t - q.t);
            if (d2 <= r2) out.push_back(j);
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::int64_t coord(double v) const {
    return static_cast<std::int64_t>(std::floor(v / r_));
  }
  std::uint64_t key(const ScanPoint& p) const {
    return pack(coord(p.x), coord(p.y), coord(p.t));
  }
  static std::uint64_t pack(std::int64_t x, std::int64_t y, std::int64_t t) {
    const std::uint64_t a = static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ull;
    const std::uint64_t b = static_cast<std::uint64_t>(y) * 0xc2b2ae3d27d4eb4full;
    const std::uint64_t c = static_cast<std::uint64_t>(t) * 0x165667b19e3779f9ull;
    return a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6)) ^ (c << 1);
  }

  const std::vector<ScanPoint>& pts_;
  double r_;
  std::unordered_map<std::uint64_t, std::vector<int>> boxes_;
};

}  // namespace detail

constexpr int kNoise = -1;

// Density clustering in standardized space. Neighborhoods are closed balls
// (distance <= radius) including the point itself; a point is core when its
// neighborhood holds at least min_points points. Core points within radius of
// each other are density-connected into one cluster; a non-core point joins
// the cluster of its nearest core neighbor (border) or stays noise. Labels
// are 0-based in order of first cluster appearance; noise is -1.
inline std::vector<int> dbscan(const std::vector<ScanPoint>& points,
                               double radius, int min_points) {
  if (!(radius > 0.0)) throw std::invalid_argument("dbscan: radius <= 0");
  if (min_points < 1) throw std::invalid_argument("dbscan: min_points < 1");
  const int n = static_cast<int>(points.size());
  std::vector<int> labels(n, kNoise);
  if (n == 0) return labels;

  const detail::BoxIndex index(points, radius);
  std::vector<std::vector<int>> nbrs(n);
  std::vector<bool> core(n, false);
  for (int i = 0; i < n; ++i) {
    nbrs[i] = index.neighbors(i);
    core[i] = static_cast<int>(nbrs[i].size()) >= min_points;
  }

  // Connected components over core points.
  int next_label = 0;
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != kNoise) continue;
    const int label = next_label++;
    labels[i] = label;
    stack.assign(1, i);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const int v : nbrs[u]) {
        if (!core[v] || labels[v] != kNoise) continue;
        labels[v] = label;
        stack.push_back(v);
      }
    }
  }

  // Border points: adopt the nearest core neighbor's cluster (ties by lowest
  // point index, which the ascending neighbor order provides).
  for (int i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    int best_core = -1;
    for (const int v : nbrs[i]) {
      if (!core[v]) continue;
      const double d2 = (points[i].x - points[v].x) * (points[i].x - points[v].x) +
                        (points[i].y - points[v].y) * (points[i].y - points[v].y) +
                        (points[i].t - points[v].t) * (points[i].t - points[v].t);
      if (d2 < best) {
        best = d2;
        best_core = v;
      }
    }
    if (best_core >= 0) labels[i] = labels[best_core];
  }
  return labels;
}

}  // namespace stormrain
