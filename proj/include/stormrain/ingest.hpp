#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stormrain/csv.hpp"
#include "stormrain/field.hpp"
#include "stormrain/grid.hpp"
#include "stormrain/stats.hpp"
#include "stormrain/types.hpp"

namespace stormrain {

// ---- loaders ---------------------------------------------------------------

inline std::vector<LightningStrike> load_lightning(const std::string& path) {
  CsvReader csv(path);
  csv.require_header({"timestamp", "x_m", "y_m"});
  std::vector<LightningStrike> out;
  std::vector<std::string> f;
  while (csv.next(f)) {
    LightningStrike s;
    try {
      s.t = parse_instant(f[0]);
    } catch (const DataError& e) {
      csv.fail(e.what());
    }
    s.x_m = csv.to_double(f[1]);
    s.y_m = csv.to_double(f[2]);
    out.push_back(s);
  }
  return out;
}

inline std::vector<GaugeReading> load_gauges(const std::string& path) {
  CsvReader csv(path);
  csv.require_header(
      {"station_id", "x_m", "y_m", "timestamp", "accum_mm", "interval_min"});
  std::vector<GaugeReading> out;
  std::vector<std::string> f;
  while (csv.next(f)) {
    GaugeReading r;
    r.station_id = f[0];
    r.x_m = csv.to_double(f[1]);
    r.y_m = csv.to_double(f[2]);
    try {
      r.stamp = parse_instant(f[3]);
    } catch (const DataError& e) {
      csv.fail(e.what());
    }
    r.accum_mm = csv.to_double(f[4]);
    r.interval_min = static_cast<int>(csv.to_int(f[5]));
    if (r.accum_mm < 0.0) csv.fail("negative accumulation");
    if (r.interval_min <= 0) csv.fail("non-positive interval_min");
    out.push_back(r);
  }
  return out;
}

inline std::vector<SatelliteCellHour> load_satellite(const std::string& path) {
  CsvReader csv(path);
  csv.require_header({"row", "col", "hour_start", "rain_mm"});
  std::vector<SatelliteCellHour> out;
  std::vector<std::string> f;
  while (csv.next(f)) {
    SatelliteCellHour r;
    r.row = static_cast<int>(csv.to_int(f[0]));
    r.col = static_cast<int>(csv.to_int(f[1]));
    try {
      r.hour_start = parse_instant(f[2]);
    } catch (const DataError& e) {
      csv.fail(e.what());
    }
    r.rain_mm = csv.to_double(f[3]);
    if (r.rain_mm < 0.0) csv.fail("negative rain");
    out.push_back(r);
  }
  return out;
}

// ---- gauge filtering -------------------------------------------------------

// A raw gauge stamp t covers (t - dt, t]; the stored interval i covers
// [t_i, t_{i+1}). A stamp maps to interval index (stamp - t0)/dt - 1 when it
// lies on the interval lattice.
inline bool gauge_interval_index(Instant stamp, Instant t0, int dt_min,
                                 int T, int& out) {
  const std::int64_t dt = std::int64_t{60} * dt_min;
  const std::int64_t off = stamp - t0;
  if (off % dt != 0) return false;
  const std::int64_t i = off / dt - 1;
  if (i < 0 || i >= T) return false;
  out = static_cast<int>(i);
  return true;
}

// Drops every reading of any station whose fraction of missing intervals over
// the analysis window exceeds `max_missing_frac`. A station's expected record
// count is the window's interval count T.
inline std::vector<GaugeReading> filter_gauges(
    const std::vector<GaugeReading>& readings, double max_missing_frac,
    Instant t0, int dt_min, int T) {
  if (T <= 0) throw std::invalid_argument("filter_gauges: T must be positive");
  if (!(max_missing_frac >= 0.0 && max_missing_frac <= 1.0)) {
    throw std::invalid_argument("filter_gauges: fraction outside [0,1]");
  }
  std::map<std::string, std::set<int>> present;
  for (const auto& r : readings) {
    int idx;
    if (gauge_interval_index(r.stamp, t0, dt_min, T, idx)) {
      present[r.station_id].insert(idx);
    } else {
      present[r.station_id];  // station exists even if all records fall out
    }
  }
  std::set<std::string> keep;
  for (const auto& [station, intervals] : present) {
    const double missing =
        static_cast<double>(T - static_cast<int>(intervals.size())) /
        static_cast<double>(T);
    if (missing <= max_missing_frac) keep.insert(station);
  }
  std::vector<GaugeReading> out;
  for (const auto& r : readings) {
    if (keep.count(r.station_id)) out.push_back(r);
  }
  return out;
}

// ---- binning ---------------------------------------------------------------

struct BinnedLightning {
  SpaceTimeField counts;       // strikes per (interval, cell), 0 where none
  std::size_t dropped = 0;     // outside the grid rectangle or the window
};

// Lightning records cover [t, t+1): a strike at instant s lands in interval
// floor((s - t0)/dt). Total stored count + dropped == input count.
inline BinnedLightning bin_lightning(const std::vector<LightningStrike>& strikes,
                                     const Grid& grid, Instant t0, int dt_min,
                                     int T) {
  if (T <= 0) throw std::invalid_argument("bin_lightning: T must be positive");
  BinnedLightning out;
  out.counts = SpaceTimeField(grid, t0, dt_min, T, 0.0);
  for (const auto& s : strikes) {
    const int t = out.counts.interval_of(s.t);
    CellIndex c;
    if (t < 0 || !grid.locate(s.x_m, s.y_m, c)) {
      ++out.dropped;
      continue;
    }
    out.counts.at(t, grid.linear(c)) += 1.0;
  }
  return out;
}

struct AggregatedGauges {
  SpaceTimeField rain;              // mm per (interval, cell); NaN = missing
  std::vector<int> gauged_cells;    // cells hosting at least one station
  std::size_t dropped = 0;          // off-window or off-lattice stamps
};

// Cell value = median over the co-located gauges' readings for the interval
// (an even count averages the two central values). Cells without any gauge
// stay missing; so do gauged cells with no reading for an interval.
inline AggregatedGauges aggregate_gauges(const std::vector<GaugeReading>& readings,
                                         const Grid& grid, Instant t0,
                                         int dt_min, int T) {
  if (T <= 0) throw std::invalid_argument("aggregate_gauges: T must be positive");
  for (const auto& r : readings) {
    if (r.interval_min != dt_min) {
      throw std::invalid_argument(
          "aggregate_gauges: reading cadence " + std::to_string(r.interval_min) +
          " min does not match run cadence " + std::to_string(dt_min) + " min");
    }
  }
  AggregatedGauges out;
  out.rain = SpaceTimeField(grid, t0, dt_min, T);
  std::map<std::pair<int, int>, std::vector<double>> samples;  // (t, cell)
  std::set<int> gauged;
  for (const auto& r : readings) {
    CellIndex c;
    if (!grid.locate(r.x_m, r.y_m, c)) {
      ++out.dropped;
      continue;
    }
    gauged.insert(grid.linear(c));
    int idx;
    if (!gauge_interval_index(r.stamp, t0, dt_min, T, idx)) {
      ++out.dropped;
      continue;
    }
    samples[{idx, grid.linear(c)}].push_back(r.accum_mm);
  }
  for (auto& [key, vals] : samples) {
    out.rain.at(key.first, key.second) = median_of(vals);
  }
  out.gauged_cells.assign(gauged.begin(), gauged.end());
  return out;
}

struct AlignedSatellite {
  SpaceTimeField rain;       // hourly mm; NaN where no record
  std::size_t dropped = 0;   // records outside [t0, t0 + T_hours)
};

// Satellite records already live on the analysis grid; (row, col) outside it
// is an error, and duplicate (cell, hour) records are rejected.
inline AlignedSatellite align_satellite(const std::vector<SatelliteCellHour>& records,
                                        const Grid& grid, Instant t0,
                                        int T_hours) {
  if (T_hours <= 0) {
    throw std::invalid_argument("align_satellite: T_hours must be positive");
  }
  AlignedSatellite out;
  out.rain = SpaceTimeField(grid, t0, 60, T_hours);
  std::string bad_cells;
  for (const auto& r : records) {
    if (!grid.valid({r.row, r.col})) {
      if (!bad_cells.empty()) bad_cells += ", ";
      bad_cells += "(" + std::to_string(r.row) + "," + std::to_string(r.col) + ")";
    }
  }
  if (!bad_cells.empty()) {
    throw DataError("satellite cells outside grid: " + bad_cells);
  }
  for (const auto& r : records) {
    const std::int64_t off = r.hour_start - t0;
    if (off % 3600 != 0 || off < 0 || off / 3600 >= T_hours) {
      ++out.dropped;
      continue;
    }
    const int h = static_cast<int>(off / 3600);
    const int cell = grid.linear({r.row, r.col});
    if (out.rain.has(h, cell)) {
      throw DataError("duplicate satellite record for cell (" +
                      std::to_string(r.row) + "," + std::to_string(r.col) +
                      ") at " + format_instant(r.hour_start));
    }
    out.rain.at(h, cell) = r.rain_mm;
  }
  return out;
}

}  // namespace stormrain
