#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stormrain {

// Tipping-bucket style gauges report light rain on a coarse step: every
// accumulation below 1 mm collapses onto one of five 0.2 mm plateaus. We
// therefore treat such readings as interval-censored rather than exact.
//
// All model-side values live on the log scale y -> log(y + 1).
struct Discretization {
  // Upper edges (mm) of the five plateaus; at and above the last edge the
  // reading is taken as exact.
  std::array<double, 5> thresholds_mm{0.2, 0.4, 0.6, 0.8, 1.0};

  // Representative log-scale value of each plateau: log(midpoint + 1).
  std::array<double, 5> plateau_log{std::log1p(0.1), std::log1p(0.3),
                                    std::log1p(0.5), std::log1p(0.7),
                                    std::log1p(0.9)};

  int plateau_count() const { return static_cast<int>(thresholds_mm.size()); }

  // Log-scale interval [lower, upper) compatible with plateau k. The lowest
  // plateau is unbounded below: the latent process may dip under zero rain.
  double lower_log(int k) const {
    check(k);
    if (k == 0) return -std::numeric_limits<double>::infinity();
    return std::log1p(thresholds_mm[static_cast<std::size_t>(k - 1)]);
  }
  double upper_log(int k) const {
    check(k);
    return std::log1p(thresholds_mm[static_cast<std::size_t>(k)]);
  }

 private:
  void check(int k) const {
    if (k < 0 || k >= plateau_count()) {
      throw std::invalid_argument("plateau index out of range");
    }
  }
};

// One gauge reading after censoring. For a plateau, `value` is the plateau's
// representative log rain; otherwise it is the exact log-transformed amount.
struct Observation {
  int plateau = -1;  // -1 when the reading is exact
  double value = 0.0;

  bool is_plateau() const { return plateau >= 0; }
};

inline Observation censor(double y_mm, const Discretization& d = {}) {
  if (!(y_mm >= 0.0)) {
    throw std::invalid_argument("rain amounts must be non-negative");
  }
  for (int k = 0; k < d.plateau_count(); ++k) {
    if (y_mm < d.thresholds_mm[static_cast<std::size_t>(k)]) {
      return Observation{k, d.plateau_log[static_cast<std::size_t>(k)]};
    }
  }
  return Observation{-1, std::log1p(y_mm)};
}

}  // namespace stormrain
