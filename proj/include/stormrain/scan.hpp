#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "stormrain/dbscan.hpp"
#include "stormrain/grid.hpp"
#include "stormrain/stats.hpp"
#include "stormrain/types.hpp"

namespace stormrain {

enum class EventClass { Small, Medium, Large, VeryLarge };

inline const char* to_string(EventClass c) {
  switch (c) {
    case EventClass::Small: return "Small";
    case EventClass::Medium: return "Medium";
    case EventClass::Large: return "Large";
    case EventClass::VeryLarge: return "VeryLarge";
  }
  return "?";
}

// Size classes by strike count: Small <= 170 < Medium <= 900 < Large <= 8000
// < VeryLarge.
inline EventClass classify_event(std::size_t count) {
  if (count <= 170) return EventClass::Small;
  if (count <= 900) return EventClass::Medium;
  if (count <= 8000) return EventClass::Large;
  return EventClass::VeryLarge;
}

struct ConvectiveEvent {
  int id = 0;
  std::vector<std::size_t> strike_ids;   // indices into the input archive
  std::vector<LightningStrike> strikes;  // the member strikes themselves
  Instant t_start = 0;
  Instant t_end = 0;
  EventClass event_class = EventClass::Small;
  // Filled by the assembly pass when computable:
  Instant t_charge = 0;                  // start of the peak-activity interval
  bool has_phase = false;
  double v1_m_s = std::numeric_limits<double>::quiet_NaN();
  double v2_m_s = std::numeric_limits<double>::quiet_NaN();
  double v_m_s = std::numeric_limits<double>::quiet_NaN();
  double area_km2 = 0.0;
  double centroid_x_m = 0.0;
  double centroid_y_m = 0.0;

  std::size_t count() const { return strikes.size(); }
};

// ---- daily windows ----------------------------------------------------------

struct DailyWindow {
  Instant day = 0;                      // midnight of the window's focal day
  Instant begin = 0;                    // 18:00 of the previous day
  Instant end = 0;                      // 06:00 of the following day
  std::vector<std::size_t> strike_ids;  // archive indices inside [begin, end)
};

// One window per calendar day from the day before the first strike to the day
// after the last. A window spans 18:00 of its previous day to 06:00 of its
// next day, so consecutive windows overlap and a strike can appear in two.
inline std::vector<DailyWindow> daily_windows(const std::vector<LightningStrike>& strikes) {
  std::vector<DailyWindow> out;
  if (strikes.empty()) return out;
  Instant lo = strikes.front().t, hi = strikes.front().t;
  for (const auto& s : strikes) {
    lo = std::min(lo, s.t);
    hi = std::max(hi, s.t);
  }
  const Instant first_day = day_start(lo) - 86400;
  const Instant last_day = day_start(hi) + 86400;
  for (Instant day = first_day; day <= last_day; day += 86400) {
    DailyWindow w;
    w.day = day;
    w.begin = day - 86400 + 18 * 3600;
    w.end = day + 86400 + 6 * 3600;
    out.push_back(w);
  }
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    for (auto& w : out) {
      if (strikes[i].t >= w.begin && strikes[i].t < w.end) {
        w.strike_ids.push_back(i);
      }
    }
  }
  return out;
}

// ---- per-event diagnostics ---------------------------------------------------

// Per-interval strike counts over [t_start, t_end] at cadence dt_min.
inline std::vector<double> interval_counts(const ConvectiveEvent& e, int dt_min) {
  const std::int64_t dt = std::int64_t{60} * dt_min;
  const int n = static_cast<int>((e.t_end - e.t_start) / dt) + 1;
  std::vector<double> counts(n, 0.0);
  for (const auto& s : e.strikes) {
    counts[static_cast<std::size_t>((s.t - e.t_start) / dt)] += 1.0;
  }
  return counts;
}

// End of the charging phase: the start instant of the interval maximizing the
// smoothed per-interval count (earliest on ties). Needs at least 3 intervals.
inline Instant detect_phase(const ConvectiveEvent& e, int dt_min) {
  if (dt_min <= 0) throw std::invalid_argument("detect_phase: dt_min <= 0");
  if (e.strikes.empty()) throw std::invalid_argument("detect_phase: empty event");
  const std::vector<double> counts = interval_counts(e, dt_min);
  if (counts.size() < 3) {
    throw std::invalid_argument("detect_phase: event spans fewer than 3 intervals");
  }
  const std::vector<double> sm = smooth3(counts);
  std::size_t best = 0;
  for (std::size_t i = 1; i < sm.size(); ++i) {
    if (sm[i] > sm[best]) best = i;
  }
  return e.t_start + static_cast<Instant>(best) * 60 * dt_min;
}

struct EventVelocities {
  double v1_m_s = 0.0;  // charging: start centroid -> peak centroid
  double v2_m_s = 0.0;  // mature: peak centroid -> end centroid
  double v_m_s = 0.0;   // whole event: start centroid -> end centroid
};

namespace detail {

inline void anchored_centroid(const ConvectiveEvent& e, Instant anchor,
                              double& cx, double& cy) {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (const auto& s : e.strikes) {
    if (std::llabs(s.t - anchor) <= 60) {
      sx += s.x_m;
      sy += s.y_m;
      ++n;
    }
  }
  if (n == 0) {
    throw std::invalid_argument("event_velocity: no strikes within 60 s of " +
                                format_instant(anchor));
  }
  cx = sx / static_cast<double>(n);
  cy = sy / static_cast<double>(n);
}

}  // namespace detail

// Phase velocities from the centroids of the strikes within +-60 s of the
// event start, the charging peak, and the event end.
inline EventVelocities event_velocity(const ConvectiveEvent& e, Instant t_charge) {
  if (!(e.t_start < t_charge && t_charge < e.t_end)) {
    throw std::invalid_argument(
        "event_velocity: charge time must lie strictly inside the event span");
  }
  double sx, sy, px, py, ex, ey;
  detail::anchored_centroid(e, e.t_start, sx, sy);
  detail::anchored_centroid(e, t_charge, px, py);
  detail::anchored_centroid(e, e.t_end, ex, ey);
  EventVelocities v;
  v.v1_m_s = std::hypot(px - sx, py - sy) / static_cast<double>(t_charge - e.t_start);
  v.v2_m_s = std::hypot(ex - px, ey - py) / static_cast<double>(e.t_end - t_charge);
  v.v_m_s = std::hypot(ex - sx, ey - sy) / static_cast<double>(e.t_end - e.t_start);
  return v;
}

// Area in km^2 of the cells struck at least once. Strikes outside the grid
// rectangle do not add cells.
inline double event_area(const ConvectiveEvent& e, const Grid& grid) {
  std::set<int> cells;
  for (const auto& s : e.strikes) {
    CellIndex c;
    if (grid.locate(s.x_m, s.y_m, c)) cells.insert(grid.linear(c));
  }
  return static_cast<double>(cells.size()) * grid.cell_area_km2();
}

// ---- event assembly ----------------------------------------------------------

struct ScanConfig {
  double radius = 0.3;    // closed-ball radius in standardized space
  int min_points = 10;    // neighborhood size for a core point
  int dt_min = 15;        // cadence for phase detection
  double merge_overlap = 0.5;  // shared-strike fraction that merges events
};

struct ScanResult {
  std::vector<ConvectiveEvent> events;  // sorted by (t_start, id)
  std::vector<int> labels;              // per input strike: event id or -1
};

namespace detail {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// Full detection pass: cluster each daily window (standardizing per window),
// merge events that share at least `merge_overlap` of the smaller event's
// strikes (clusters of the same storm seen by two overlapping windows), then
// attach class, phase, velocities and area.
inline ScanResult detect_events(const std::vector<LightningStrike>& strikes,
                                const Grid& grid, const ScanConfig& cfg = {}) {
  std::vector<std::vector<std::size_t>> clusters;  // strike ids per raw cluster
  for (const auto& window : daily_windows(strikes)) {
    if (window.strike_ids.size() < 2) continue;
    std::vector<LightningStrike> pts;
    pts.reserve(window.strike_ids.size());
    for (const std::size_t id : window.strike_ids) pts.push_back(strikes[id]);
    std::vector<ScanPoint> std_pts;
    try {
      std_pts = standardize(pts);
    } catch (const DataError&) {
      continue;  // degenerate window (all strikes coincident on an axis)
    }
    const std::vector<int> labels = dbscan(std_pts, cfg.radius, cfg.min_points);
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[k] != kNoise) {
        by_label[labels[k]].push_back(window.strike_ids[k]);
      }
    }
    for (auto& [label, ids] : by_label) clusters.push_back(std::move(ids));
  }

  // Merge clusters with large overlap relative to the smaller one.
  const int m = static_cast<int>(clusters.size());
  detail::DisjointSet ds(m);
  std::vector<std::set<std::size_t>> sets(m);
  for (int i = 0; i < m; ++i) sets[i].insert(clusters[i].begin(), clusters[i].end());
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const auto& small = sets[i].size() <= sets[j].size() ? sets[i] : sets[j];
      const auto& big = sets[i].size() <= sets[j].size() ? sets[j] : sets[i];
      std::size_t shared = 0;
      for (const auto id : small) shared += big.count(id);
      if (static_cast<double>(shared) >=
          cfg.merge_overlap * static_cast<double>(small.size())) {
        ds.unite(i, j);
      }
    }
  }
  std::map<int, std::set<std::size_t>> merged;
  for (int i = 0; i < m; ++i) {
    merged[ds.find(i)].insert(sets[i].begin(), sets[i].end());
  }

  ScanResult out;
  out.labels.assign(strikes.size(), kNoise);
  std::vector<ConvectiveEvent> events;
  for (const auto& [root, ids] : merged) {
    ConvectiveEvent e;
    e.strike_ids.assign(ids.begin(), ids.end());
    for (const auto id : e.strike_ids) e.strikes.push_back(strikes[id]);
    e.t_start = e.strikes.front().t;
    e.t_end = e.strikes.front().t;
    double cx = 0, cy = 0;
    for (const auto& s : e.strikes) {
      e.t_start = std::min(e.t_start, s.t);
      e.t_end = std::max(e.t_end, s.t);
      cx += s.x_m;
      cy += s.y_m;
    }
    e.centroid_x_m = cx / static_cast<double>(e.strikes.size());
    e.centroid_y_m = cy / static_cast<double>(e.strikes.size());
    e.event_class = classify_event(e.count());
    e.area_km2 = event_area(e, grid);
    try {
      e.t_charge = detect_phase(e, cfg.dt_min);
      e.has_phase = true;
      const EventVelocities v = event_velocity(e, e.t_charge);
      e.v1_m_s = v.v1_m_s;
      e.v2_m_s = v.v2_m_s;
      e.v_m_s = v.v_m_s;
    } catch (const std::invalid_argument&) {
      // Degenerate span or empty anchor neighborhoods: event kept, phase
      // diagnostics left unset.
    }
    events.push_back(std::move(e));
  }
  std::sort(events.begin(), events.end(),
            [](const ConvectiveEvent& a, const ConvectiveEvent& b) {
              if (a.t_start != b.t_start) return a.t_start < b.t_start;
              return a.strike_ids.front() < b.strike_ids.front();
            });
  for (std::size_t i = 0; i < events.size(); ++i) {
    events[i].id = static_cast<int>(i);
    for (const auto sid : events[i].strike_ids) {
      out.labels[sid] = events[i].id;
    }
  }
  out.events = std::move(events);
  return out;
}

// Detection-sensitivity sweep: events found per radius, other settings fixed.
inline std::map<double, std::size_t> radius_sweep(
    const std::vector<LightningStrike>& strikes, const Grid& grid,
    const std::vector<double>& radii, const ScanConfig& base = {}) {
  std::map<double, std::size_t> out;
  for (const double r : radii) {
    ScanConfig cfg = base;
    cfg.radius = r;
    out[r] = detect_events(strikes, grid, cfg).events.size();
  }
  return out;
}

}  // namespace stormrain
