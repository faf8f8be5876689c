#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stormrain/error.hpp"
#include "stormrain/field.hpp"
#include "stormrain/ingest.hpp"
#include "stormrain/scan.hpp"
#include "stormrain/stats.hpp"
#include "stormrain/verify.hpp"

namespace stormrain {

// Rain over one cell, mm to 10^3 m^3.
inline double rain_volume_units(double rain_mm, double cell_area_m2) {
  return rain_mm * cell_area_m2 / 1e6;
}

// Per-event rainfall-lightning ratio: satellite rain volume over the event's
// cells and hours divided by the lightning count on the same support.
// Result is 10^3 m^3 per flash.
inline double rlr_single(const ConvectiveEvent& e, const SpaceTimeField& satellite) {
  if (satellite.dt_min != 60) {
    throw std::invalid_argument("rlr needs an hourly satellite field");
  }
  std::vector<std::uint8_t> in_area(static_cast<std::size_t>(satellite.grid.size()), 0);
  for (const auto& s : e.strikes) {
    CellIndex c;
    if (satellite.grid.locate(s.x_m, s.y_m, c)) {
      in_area[static_cast<std::size_t>(satellite.grid.linear(c))] = 1;
    }
  }
  std::int64_t flashes = 0;
  for (const auto& s : e.strikes) {
    CellIndex c;
    if (!satellite.grid.locate(s.x_m, s.y_m, c)) continue;
    if (satellite.interval_of(s.t) >= 0) ++flashes;
  }
  if (flashes == 0) {
    throw DataError("event lightning falls outside the satellite window");
  }
  double volume = 0.0;
  for (int h = 0; h < satellite.T; ++h) {
    const Instant lo = satellite.interval_start(h);
    const Instant hi = lo + satellite.dt_seconds();
    if (lo > e.t_end || hi <= e.t_start) continue;
    for (int p = 0; p < satellite.grid.size(); ++p) {
      if (!in_area[static_cast<std::size_t>(p)]) continue;
      const double r = satellite.at(h, p);
      if (SpaceTimeField::is_missing(r)) continue;
      volume += rain_volume_units(r, satellite.grid.cell_area_m2());
    }
  }
  return volume / static_cast<double>(flashes);
}

// Satellite bias factors estimated against the gauges: f1 is the mean
// gauge-minus-satellite difference over the paired support (mm); f2 rescales
// by relative sample sizes and zero-rain frequencies of the two sources.
struct CorrectionFactors {
  double f1 = 0.0;
  double f2 = 1.0;
  std::size_t n_pairs = 0;
};

inline CorrectionFactors correction_factors(const SpaceTimeField& gauge_hourly,
                                            const SpaceTimeField& satellite) {
  if (gauge_hourly.dt_min != 60 || satellite.dt_min != 60) {
    throw std::invalid_argument("correction factors need hourly fields");
  }
  const detail::FieldPair pair = detail::paired_values(gauge_hourly, satellite);
  if (pair.first.empty()) {
    throw DataError("no paired gauge/satellite records for correction factors");
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < pair.first.size(); ++i) {
    diff += pair.first[i] - pair.second[i];
  }

  std::int64_t n_stat = 0, stat_zero = 0;
  for (const double v : gauge_hourly.values) {
    if (SpaceTimeField::is_missing(v)) continue;
    ++n_stat;
    if (v == 0.0) ++stat_zero;
  }
  std::int64_t n_sat = 0, sat_zero = 0;
  for (const double v : satellite.values) {
    if (SpaceTimeField::is_missing(v)) continue;
    ++n_sat;
    if (v == 0.0) ++sat_zero;
  }
  if (sat_zero == 0) {
    throw DataError("satellite field has no zero-rain records; f2 undefined");
  }
  CorrectionFactors out;
  out.f1 = diff / static_cast<double>(pair.first.size());
  out.f2 = (static_cast<double>(n_sat) / static_cast<double>(n_stat)) *
           (static_cast<double>(stat_zero) / static_cast<double>(sat_zero));
  out.n_pairs = pair.first.size();
  return out;
}

// Corrected per-class ratio summary. Very large events report under Large.
struct RlrEstimate {
  EventClass event_class = EventClass::Small;
  double median = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n_events = 0;
  double f1 = 0.0;
  double f2 = 1.0;
};

inline std::vector<RlrEstimate> rlr_by_class(const std::vector<ConvectiveEvent>& events,
                                             const SpaceTimeField& satellite,
                                             double f1, double f2,
                                             std::size_t min_strikes = 50,
                                             double factor_floor = 1e-6) {
  const double factor = std::max(f1 * f2, factor_floor);
  std::map<EventClass, std::vector<double>> corrected;
  for (const auto& e : events) {
    if (e.count() < min_strikes) continue;
    EventClass cls = e.event_class;
    if (cls == EventClass::VeryLarge) cls = EventClass::Large;
    corrected[cls].push_back(factor * rlr_single(e, satellite));
  }
  std::vector<RlrEstimate> out;
  for (const EventClass cls :
       {EventClass::Small, EventClass::Medium, EventClass::Large}) {
    const auto it = corrected.find(cls);
    if (it == corrected.end()) continue;
    RlrEstimate est;
    est.event_class = cls;
    est.mean = mean_of(it->second);
    est.median = median_of(it->second);
    est.sd = sample_sd(it->second);
    est.n_events = it->second.size();
    est.f1 = f1;
    est.f2 = f2;
    out.push_back(est);
  }
  return out;
}

// Deterministic lightning-to-rain reconstruction.
struct TapiaOptions {
  double c_star = 1e6;          // dimensionality adjustment
  bool uniform_kernels = false; // original point-flash formulation
  double radius_m = 5000.0;     // uniform spatial support
  double half_window_s = 300.0; // uniform temporal half-width
};

// Grid mode spreads each interval's counts over the cell and its ring
// (1/8 share); uniform mode stamps a flat patch around every flash. Output is
// rain depth in mm per interval and cell.
inline SpaceTimeField tapia_reconstruct(const ConvectiveEvent& e, double z,
                                        const Grid& grid, Instant t0, int dt_min,
                                        int T, const TapiaOptions& opt = {}) {
  if (!(z > 0.0)) throw std::invalid_argument("reconstruction needs Z > 0");
  SpaceTimeField out(grid, t0, dt_min, T, 0.0);
  const double unit = opt.c_star / grid.cell_area_m2() * z;
  if (opt.uniform_kernels) {
    for (const auto& s : e.strikes) {
      for (int t = 0; t < T; ++t) {
        const Instant lo = out.interval_start(t);
        const Instant hi = lo + out.dt_seconds();
        // Keep intervals overlapping the open window (T_i - half, T_i + half).
        const double win_lo = static_cast<double>(s.t) - opt.half_window_s;
        const double win_hi = static_cast<double>(s.t) + opt.half_window_s;
        if (static_cast<double>(lo) >= win_hi || static_cast<double>(hi) <= win_lo) {
          continue;
        }
        for (int p = 0; p < grid.size(); ++p) {
          const CellIndex c = grid.cell_of(p);
          const double dx = grid.center_x(c) - s.x_m;
          const double dy = grid.center_y(c) - s.y_m;
          if (std::sqrt(dx * dx + dy * dy) < opt.radius_m) {
            out.at(t, p) += unit;
          }
        }
      }
    }
    return out;
  }
  const BinnedLightning binned = bin_lightning(e.strikes, grid, t0, dt_min, T);
  for (int t = 0; t < T; ++t) {
    for (int p = 0; p < grid.size(); ++p) {
      double ring = 0.0;
      for (const int q : grid.neighbors(p)) ring += binned.counts.at(t, q);
      const double mass = binned.counts.at(t, p) + ring / 8.0;
      if (mass > 0.0) out.at(t, p) = unit * mass;
    }
  }
  return out;
}

// Reconstruction skill against gauges: RMSE plus detection scores at the
// rain/no-rain threshold over the paired support.
struct ReconstructionScore {
  double rmse_mm = 0.0;
  std::optional<double> pod;
  std::optional<double> pofd;
  std::size_t n_occurrences = 0;
};

inline ReconstructionScore evaluate_reconstruction(const SpaceTimeField& recon,
                                                   const SpaceTimeField& gauge) {
  const detail::FieldPair pair = detail::paired_values(recon, gauge);
  if (pair.first.empty()) {
    throw DataError("no overlap between reconstruction and gauges");
  }
  ReconstructionScore out;
  out.rmse_mm = rmse(pair.first, pair.second);
  const Scores s = scores(contingency(pair.first, pair.second));
  out.pod = s.pod;
  out.pofd = s.pofd;
  out.n_occurrences = pair.first.size();
  return out;
}

}  // namespace stormrain
