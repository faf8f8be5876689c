#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stormrain/error.hpp"
#include "stormrain/field.hpp"
#include "stormrain/stats.hpp"

namespace stormrain {

// Rain/no-rain cut: 0.2 mm and above counts as rain.
inline constexpr double kRainThresholdMm = 0.2;

struct ContingencyTable {
  std::int64_t a = 0;  // hit: predicted rain, observed rain
  std::int64_t b = 0;  // false alarm
  std::int64_t c = 0;  // miss
  std::int64_t d = 0;  // correct negative
  std::int64_t n() const { return a + b + c + d; }
};

inline ContingencyTable contingency(const std::vector<double>& pred_mm,
                                    const std::vector<double>& obs_mm,
                                    double threshold = kRainThresholdMm) {
  if (pred_mm.size() != obs_mm.size()) {
    throw std::invalid_argument("contingency needs equally sized pairings");
  }
  if (pred_mm.empty()) throw DataError("contingency over an empty pairing");
  ContingencyTable t;
  for (std::size_t i = 0; i < pred_mm.size(); ++i) {
    const bool p = pred_mm[i] >= threshold;
    const bool o = obs_mm[i] >= threshold;
    if (p && o) ++t.a;
    else if (p && !o) ++t.b;
    else if (!p && o) ++t.c;
    else ++t.d;
  }
  return t;
}

// Dichotomous skill scores. A score whose denominator vanishes is left unset
// rather than forced to a sentinel value.
struct Scores {
  std::optional<double> poht;
  std::optional<double> pod;
  std::optional<double> pofd;
  std::optional<double> hss;
};

inline Scores scores(const ContingencyTable& t) {
  Scores s;
  const double a = static_cast<double>(t.a);
  const double b = static_cast<double>(t.b);
  const double c = static_cast<double>(t.c);
  const double d = static_cast<double>(t.d);
  const double n = a + b + c + d;
  if (n > 0) s.poht = (a + d) / n;
  if (a + c > 0) s.pod = a / (a + c);
  if (b + d > 0) s.pofd = b / (b + d);
  if (n > 0) {
    const double expected = ((a + c) * (a + b) + (d + c) * (d + b)) / n;
    if (n - expected != 0.0) s.hss = (a + d - expected) / (n - expected);
  }
  return s;
}

inline double rmse(const std::vector<double>& pred, const std::vector<double>& obs) {
  if (pred.size() != obs.size()) {
    throw std::invalid_argument("rmse needs equally sized pairings");
  }
  if (pred.empty()) throw DataError("rmse over an empty pairing");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - obs[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

// Collapse a sub-hourly field to hourly cumulates. An hour is kept only when
// every one of its sub-intervals is present; trailing partial hours are cut.
inline SpaceTimeField hourly_totals(const SpaceTimeField& f) {
  if (f.dt_min == 60) return f;
  if (60 % f.dt_min != 0) {
    throw std::invalid_argument("hourly totals need a step dividing one hour");
  }
  const int per = 60 / f.dt_min;
  const int hours = f.T / per;
  if (hours == 0) throw DataError("field shorter than one hour");
  SpaceTimeField out(f.grid, f.t0, 60, hours);
  for (int h = 0; h < hours; ++h) {
    for (int p = 0; p < f.grid.size(); ++p) {
      double s = 0.0;
      bool complete = true;
      for (int k = 0; k < per; ++k) {
        const double v = f.at(h * per + k, p);
        if (SpaceTimeField::is_missing(v)) {
          complete = false;
          break;
        }
        s += v;
      }
      if (complete) out.at(h, p) = s;
    }
  }
  return out;
}

namespace detail {

// Paired non-missing values of two fields sharing a grid and cadence; the
// time lattices must coincide where they overlap.
struct FieldPair {
  std::vector<double> first;
  std::vector<double> second;
  std::vector<int> interval;  // index into `a`
  std::vector<int> cell;
};

inline FieldPair paired_values(const SpaceTimeField& a, const SpaceTimeField& b) {
  if (!(a.grid == b.grid)) {
    throw std::invalid_argument("paired fields must share the grid");
  }
  if (a.dt_min != b.dt_min) {
    throw std::invalid_argument("paired fields must share the time step");
  }
  const std::int64_t gap = b.t0 - a.t0;
  if (gap % a.dt_seconds() != 0) {
    throw std::invalid_argument("paired fields must share the time lattice");
  }
  const std::int64_t shift = gap / a.dt_seconds();
  FieldPair out;
  for (int t = 0; t < a.T; ++t) {
    const std::int64_t tb = static_cast<std::int64_t>(t) - shift;
    if (tb < 0 || tb >= b.T) continue;
    for (int p = 0; p < a.grid.size(); ++p) {
      const double va = a.at(t, p);
      const double vb = b.at(static_cast<int>(tb), p);
      if (SpaceTimeField::is_missing(va) || SpaceTimeField::is_missing(vb)) continue;
      out.first.push_back(va);
      out.second.push_back(vb);
      out.interval.push_back(t);
      out.cell.push_back(p);
    }
  }
  return out;
}

}  // namespace detail

inline ContingencyTable contingency(const SpaceTimeField& pred,
                                    const SpaceTimeField& obs,
                                    double threshold = kRainThresholdMm) {
  const detail::FieldPair pair = detail::paired_values(pred, obs);
  return contingency(pair.first, pair.second, threshold);
}

inline double rmse(const SpaceTimeField& pred, const SpaceTimeField& obs) {
  const detail::FieldPair pair = detail::paired_values(pred, obs);
  return rmse(pair.first, pair.second);
}

// Hourly head-to-head of model and satellite against the gauges.
struct BaselineComparison {
  double model_median = 0.0;
  double model_variance = 0.0;
  std::size_t model_pairs = 0;
  double satellite_median = 0.0;
  double satellite_variance = 0.0;
  std::size_t satellite_pairs = 0;
  struct CellVolume {
    int cell = 0;
    double model_minus_gauge_mm = 0.0;
    double satellite_minus_gauge_mm = 0.0;
  };
  std::vector<CellVolume> volumes;  // gauged cells, ascending cell id
};

inline BaselineComparison baseline_compare(const SpaceTimeField& prediction,
                                           const SpaceTimeField& satellite,
                                           const SpaceTimeField& gauges) {
  if (satellite.dt_min != 60) {
    throw std::invalid_argument("satellite baseline must be hourly");
  }
  const SpaceTimeField pred_h = hourly_totals(prediction);
  const SpaceTimeField gauge_h = hourly_totals(gauges);
  const detail::FieldPair model = detail::paired_values(pred_h, gauge_h);
  const detail::FieldPair sat = detail::paired_values(satellite, gauge_h);
  if (model.first.empty() || sat.first.empty()) {
    throw DataError("no gauged overlap for the baseline comparison");
  }

  BaselineComparison out;
  std::vector<double> model_res(model.first.size());
  for (std::size_t i = 0; i < model.first.size(); ++i) {
    model_res[i] = model.first[i] - model.second[i];
  }
  std::vector<double> sat_res(sat.first.size());
  for (std::size_t i = 0; i < sat.first.size(); ++i) {
    sat_res[i] = sat.first[i] - sat.second[i];
  }
  out.model_median = median_of(model_res);
  out.model_variance = sample_variance(model_res);
  out.model_pairs = model_res.size();
  out.satellite_median = median_of(sat_res);
  out.satellite_variance = sample_variance(sat_res);
  out.satellite_pairs = sat_res.size();

  std::vector<double> model_vol(static_cast<std::size_t>(gauges.grid.size()), 0.0);
  std::vector<double> sat_vol(model_vol.size(), 0.0);
  std::vector<std::uint8_t> gauged(model_vol.size(), 0);
  for (std::size_t i = 0; i < model.first.size(); ++i) {
    model_vol[static_cast<std::size_t>(model.cell[i])] += model_res[i];
    gauged[static_cast<std::size_t>(model.cell[i])] = 1;
  }
  for (std::size_t i = 0; i < sat.first.size(); ++i) {
    sat_vol[static_cast<std::size_t>(sat.cell[i])] += sat_res[i];
    gauged[static_cast<std::size_t>(sat.cell[i])] = 1;
  }
  for (int p = 0; p < gauges.grid.size(); ++p) {
    if (!gauged[static_cast<std::size_t>(p)]) continue;
    out.volumes.push_back({p, model_vol[static_cast<std::size_t>(p)],
                           sat_vol[static_cast<std::size_t>(p)]});
  }
  return out;
}

// One row of the final scorecard.
struct VerificationReport {
  std::string label;
  double dic = 0.0;
  double ec_pct = 0.0;
  std::optional<double> poht_pct;
  std::optional<double> pod_pct;
  std::optional<double> pofd_pct;
  std::optional<double> hss;
  double rmse_mm = 0.0;
};

}  // namespace stormrain
