#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "stormrain/grid.hpp"
#include "stormrain/time.hpp"

namespace stormrain {

// Gridded time-indexed field. Interval i covers [t0 + i*dt, t0 + (i+1)*dt).
// Missing entries are marked with NaN and never conflated with 0.
struct SpaceTimeField {
  Grid grid;
  Instant t0 = 0;
  int dt_min = 15;
  int T = 0;
  std::vector<double> values;  // T * grid.size(), row-major in (t, cell)

  SpaceTimeField() = default;
  SpaceTimeField(const Grid& g, Instant start, int dt_minutes, int intervals,
                 double fill = missing_value())
      : grid(g), t0(start), dt_min(dt_minutes), T(intervals) {
    if (dt_min <= 0) throw std::invalid_argument("dt_min must be positive");
    if (T <= 0) throw std::invalid_argument("T must be positive");
    values.assign(static_cast<std::size_t>(T) * grid.size(), fill);
  }

  static double missing_value() {
    return std::numeric_limits<double>::quiet_NaN();
  }
  static bool is_missing(double v) { return std::isnan(v); }

  std::int64_t dt_seconds() const { return std::int64_t{60} * dt_min; }
  Instant interval_start(int t) const { return t0 + t * dt_seconds(); }
  Instant end() const { return t0 + T * dt_seconds(); }

  // Interval containing instant `at` under the [t, t+1) convention, or -1.
  int interval_of(Instant at) const {
    if (at < t0 || at >= end()) return -1;
    return static_cast<int>((at - t0) / dt_seconds());
  }

  double& at(int t, int cell) { return values[index(t, cell)]; }
  double at(int t, int cell) const { return values[index(t, cell)]; }
  bool has(int t, int cell) const { return !is_missing(values[index(t, cell)]); }

  std::size_t index(int t, int cell) const {
    if (t < 0 || t >= T || cell < 0 || cell >= grid.size()) {
      throw std::invalid_argument("field index out of range");
    }
    return static_cast<std::size_t>(t) * grid.size() + cell;
  }
};

}  // namespace stormrain
