#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "stormrain/car.hpp"
#include "stormrain/error.hpp"
#include "stormrain/field.hpp"
#include "stormrain/ingest.hpp"
#include "stormrain/mcmc.hpp"
#include "stormrain/meanfield.hpp"
#include "stormrain/rng.hpp"
#include "stormrain/stats.hpp"
#include "stormrain/time.hpp"
#include "stormrain/types.hpp"
#include "stormrain/verify.hpp"

namespace stormrain {

// Poisson draw by counting exponential arrivals, so it depends only on the
// shared uniform stream and never on a platform's distribution internals.
inline int poisson_draw(Rng& rng, double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson mean must be >= 0");
  int k = 0;
  double arrival = 0.0;
  for (;;) {
    arrival += -std::log(rng.uniform01());
    if (arrival >= mean) return k;
    ++k;
  }
}

inline ModelParams synth_default_params() {
  ModelParams p;
  p.alpha = 0.5;
  p.prec_eta = 4.0;
  p.prec_s = 20.0;
  p.rho_s = 0.05;
  p.prec_y = 4.0;
  return p;
}

// One latent draw from the hierarchical model: AR(1) temporal effect, CAR
// spatial effect obtained by back-solving the upper Cholesky factor of its
// precision, and iid observation noise on top of the supplied mean field.
struct LatentDraw {
  std::vector<double> temporal;  // one per interval
  std::vector<double> spatial;   // over car.cells, in that order
  SpaceTimeField latent;         // mu + temporal + spatial + noise
};

inline LatentDraw draw_latent_field(const SpaceTimeField& mu,
                                    const CarStructure& car,
                                    const ModelParams& p, Rng& rng) {
  if (!(p.prec_eta > 0.0 && p.prec_s > 0.0 && p.prec_y > 0.0)) {
    throw std::invalid_argument("latent draw needs positive precisions");
  }
  check_rho(car, p.rho_s);
  const int T = mu.T;
  const int P = mu.grid.size();

  LatentDraw out;
  out.temporal.resize(static_cast<std::size_t>(T));
  const double sd_eta = 1.0 / std::sqrt(p.prec_eta);
  out.temporal[0] = rng.normal(0.0, sd_eta);
  for (int t = 1; t < T; ++t) {
    out.temporal[static_cast<std::size_t>(t)] =
        p.alpha * out.temporal[static_cast<std::size_t>(t - 1)] +
        rng.normal(0.0, sd_eta);
  }

  const Eigen::MatrixXd q = Eigen::MatrixXd(car_precision(car, p.rho_s, p.prec_s));
  const Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success) {
    throw NumericError("spatial precision is not positive definite");
  }
  Eigen::VectorXd z(static_cast<Eigen::Index>(car.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Eigen::VectorXd s = llt.matrixU().solve(z);
  out.spatial.assign(s.data(), s.data() + s.size());

  std::vector<double> site(static_cast<std::size_t>(P), 0.0);
  for (std::size_t i = 0; i < car.cells.size(); ++i) {
    site[static_cast<std::size_t>(car.cells[i])] = out.spatial[i];
  }

  out.latent = SpaceTimeField(mu.grid, mu.t0, mu.dt_min, T, 0.0);
  const double sd_y = 1.0 / std::sqrt(p.prec_y);
  for (int t = 0; t < T; ++t) {
    for (int cell = 0; cell < P; ++cell) {
      out.latent.at(t, cell) = mu.at(t, cell) +
                               out.temporal[static_cast<std::size_t>(t)] +
                               site[static_cast<std::size_t>(cell)] +
                               rng.normal(0.0, sd_y);
    }
  }
  return out;
}

// Synthetic convective storm: one cell cluster crossing the grid on a straight
// track. Lightning is Poisson around the moving core with a triangular life
// cycle envelope, and rainfall is simulated from the hierarchical model itself
// so fits against the output have a known truth. Everything is a pure function
// of the seed.
struct SynthConfig {
  Grid grid{0.0, 0.0, 2000.0, 10, 10};
  Instant t0 = make_instant(2014, 10, 20, 12, 0, 0);
  int dt_min = 15;
  int T = 48;
  std::uint64_t seed = 7;

  ModelParams params = synth_default_params();
  double scale_c = 1.0;

  // Flashes per cell-interval at the core when the envelope peaks, and the
  // Gaussian footprint radius of the core.
  double peak_rate = 7.0;
  double footprint_m = 4200.0;

  // Track endpoints and life cycle (interval indices, end exclusive).
  double start_x_m = 3000.0;
  double start_y_m = 4000.0;
  double end_x_m = 17000.0;
  double end_y_m = 16000.0;
  int t_begin = 2;
  int t_peak = 14;
  int t_end = 44;

  double gauge_fraction = 1.0;    // share of cells carrying a gauge
  double satellite_scale = 0.85;  // multiplicative satellite bias
};

struct SyntheticStorm {
  Grid grid;
  Instant t0 = 0;
  int dt_min = 15;
  int T = 0;
  ModelParams params;
  double scale_c = 1.0;
  int charge_index = 0;  // last charging interval used by the mean field
  double v1_m_s = 0.0;
  double v2_m_s = 0.0;
  double v_m_s = 0.0;

  std::vector<LightningStrike> strikes;
  std::vector<GaugeReading> readings;
  std::vector<SatelliteCellHour> satellite;
  std::vector<int> station_cells;  // ascending

  SpaceTimeField counts;   // binned lightning
  SpaceTimeField mu;       // generating mean field
  SpaceTimeField latent;   // log-scale truth
  SpaceTimeField rain_mm;  // expm1 of the latent, floored at zero
  std::vector<double> temporal;
  std::vector<double> spatial;  // over all grid cells, ascending
};

namespace detail {

inline double synth_envelope(int t, const SynthConfig& cfg) {
  if (t < cfg.t_begin || t >= cfg.t_end) return 0.0;
  if (t <= cfg.t_peak) {
    return static_cast<double>(t - cfg.t_begin + 1) /
           static_cast<double>(cfg.t_peak - cfg.t_begin + 1);
  }
  return static_cast<double>(cfg.t_end - t) /
         static_cast<double>(cfg.t_end - cfg.t_peak);
}

inline void synth_core(int t, const SynthConfig& cfg, double& cx, double& cy) {
  const int last = cfg.t_end - 1;
  double u = last > cfg.t_begin
                 ? static_cast<double>(t - cfg.t_begin) /
                       static_cast<double>(last - cfg.t_begin)
                 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  cx = cfg.start_x_m + u * (cfg.end_x_m - cfg.start_x_m);
  cy = cfg.start_y_m + u * (cfg.end_y_m - cfg.start_y_m);
}

inline std::string synth_station_id(int cell) {
  std::string digits = std::to_string(cell);
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  return "SYN" + digits;
}

}  // namespace detail

inline SyntheticStorm synthesize_storm(const SynthConfig& cfg = {}) {
  if (!(0 <= cfg.t_begin && cfg.t_begin < cfg.t_peak && cfg.t_peak < cfg.t_end &&
        cfg.t_end <= cfg.T)) {
    throw std::invalid_argument("storm life cycle must satisfy 0 <= begin < peak < end <= T");
  }
  if (!(cfg.peak_rate > 0.0 && cfg.footprint_m > 0.0)) {
    throw std::invalid_argument("storm intensity and footprint must be positive");
  }
  if (!(cfg.gauge_fraction > 0.0 && cfg.gauge_fraction <= 1.0)) {
    throw std::invalid_argument("gauge fraction must lie in (0, 1]");
  }
  if (!(cfg.satellite_scale > 0.0)) {
    throw std::invalid_argument("satellite scale must be positive");
  }

  SyntheticStorm out;
  out.grid = cfg.grid;
  out.t0 = cfg.t0;
  out.dt_min = cfg.dt_min;
  out.T = cfg.T;
  out.params = cfg.params;
  out.scale_c = cfg.scale_c;
  const int P = cfg.grid.size();
  const std::int64_t dt_sec = std::int64_t{60} * cfg.dt_min;

  // Lightning: Poisson counts around the moving core, each flash placed
  // uniformly inside its cell-interval.
  Rng bolt(derive_seed(cfg.seed, "synth-lightning", 0));
  const double two_sigma2 = 2.0 * cfg.footprint_m * cfg.footprint_m;
  for (int t = 0; t < cfg.T; ++t) {
    const double env = detail::synth_envelope(t, cfg);
    if (env <= 0.0) continue;
    double cx = 0.0, cy = 0.0;
    detail::synth_core(t, cfg, cx, cy);
    const Instant lo = cfg.t0 + t * dt_sec;
    for (int p = 0; p < P; ++p) {
      const CellIndex c = cfg.grid.cell_of(p);
      const double dx = cfg.grid.center_x(c) - cx;
      const double dy = cfg.grid.center_y(c) - cy;
      const double rate = cfg.peak_rate * env * std::exp(-(dx * dx + dy * dy) / two_sigma2);
      if (rate < 1e-9) continue;
      const int n = poisson_draw(bolt, rate);
      const double x0 = cfg.grid.origin_x_m + c.col * cfg.grid.cell_size_m;
      const double y0 = cfg.grid.origin_y_m + c.row * cfg.grid.cell_size_m;
      for (int k = 0; k < n; ++k) {
        LightningStrike s;
        s.x_m = x0 + bolt.uniform01() * cfg.grid.cell_size_m;
        s.y_m = y0 + bolt.uniform01() * cfg.grid.cell_size_m;
        s.t = lo + static_cast<Instant>(bolt.uniform01() * static_cast<double>(dt_sec));
        out.strikes.push_back(s);
      }
    }
  }
  std::sort(out.strikes.begin(), out.strikes.end(),
            [](const LightningStrike& a, const LightningStrike& b) {
              if (a.t != b.t) return a.t < b.t;
              if (a.x_m != b.x_m) return a.x_m < b.x_m;
              return a.y_m < b.y_m;
            });

  out.counts = bin_lightning(out.strikes, cfg.grid, cfg.t0, cfg.dt_min, cfg.T).counts;

  // Phase boundary: peak interval of the smoothed grid-total flash series.
  std::vector<double> totals(static_cast<std::size_t>(cfg.T), 0.0);
  for (int t = 0; t < cfg.T; ++t) {
    for (int p = 0; p < P; ++p) totals[static_cast<std::size_t>(t)] += out.counts.at(t, p);
  }
  const std::vector<double> smoothed = smooth3(totals);
  std::size_t best = 0;
  for (std::size_t i = 1; i < smoothed.size(); ++i) {
    if (smoothed[i] > smoothed[best]) best = i;
  }
  out.charge_index = static_cast<int>(best);

  // Track-derived phase velocities, for fits that want them.
  double sx, sy, px, py, ex, ey;
  detail::synth_core(cfg.t_begin, cfg, sx, sy);
  detail::synth_core(cfg.t_peak, cfg, px, py);
  detail::synth_core(cfg.t_end - 1, cfg, ex, ey);
  const double dt_d = static_cast<double>(dt_sec);
  out.v1_m_s = std::hypot(px - sx, py - sy) / (dt_d * (cfg.t_peak - cfg.t_begin));
  out.v2_m_s = std::hypot(ex - px, ey - py) / (dt_d * (cfg.t_end - 1 - cfg.t_peak));
  out.v_m_s = std::hypot(ex - sx, ey - sy) / (dt_d * (cfg.t_end - 1 - cfg.t_begin));

  const MeanContext ctx = make_mean_context(out.counts, cfg.scale_c, out.charge_index,
                                            out.v1_m_s, out.v2_m_s, out.v_m_s);
  out.mu = mean_field(MeanVariant{MeanKind::M1, false}, ctx);

  std::vector<int> all_cells(static_cast<std::size_t>(P));
  std::iota(all_cells.begin(), all_cells.end(), 0);
  const CarStructure car = car_structure(cfg.grid, all_cells);
  Rng lat(derive_seed(cfg.seed, "synth-latent", 0));
  LatentDraw draw = draw_latent_field(out.mu, car, cfg.params, lat);
  out.temporal = std::move(draw.temporal);
  out.spatial = std::move(draw.spatial);
  out.latent = std::move(draw.latent);

  out.rain_mm = SpaceTimeField(cfg.grid, cfg.t0, cfg.dt_min, cfg.T, 0.0);
  for (int t = 0; t < cfg.T; ++t) {
    for (int p = 0; p < P; ++p) {
      out.rain_mm.at(t, p) = std::max(0.0, std::expm1(out.latent.at(t, p)));
    }
  }

  // Gauge network: a seeded subset of cells, one station per cell, placed off
  // center inside its cell, reporting every interval with end-of-span stamps.
  const int n_st = std::clamp(static_cast<int>(std::lround(cfg.gauge_fraction * P)), 1, P);
  Rng st(derive_seed(cfg.seed, "synth-stations", 0));
  std::vector<int> pool(all_cells);
  for (std::size_t i = pool.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(st.uniform01() * static_cast<double>(i));
    std::swap(pool[i - 1], pool[std::min(j, i - 1)]);
  }
  out.station_cells.assign(pool.begin(), pool.begin() + n_st);
  std::sort(out.station_cells.begin(), out.station_cells.end());

  for (const int cell : out.station_cells) {
    const CellIndex c = cfg.grid.cell_of(cell);
    const double x = cfg.grid.center_x(c) + (st.uniform01() - 0.5) * 0.6 * cfg.grid.cell_size_m;
    const double y = cfg.grid.center_y(c) + (st.uniform01() - 0.5) * 0.6 * cfg.grid.cell_size_m;
    for (int t = 0; t < cfg.T; ++t) {
      GaugeReading r;
      r.station_id = detail::synth_station_id(cell);
      r.x_m = x;
      r.y_m = y;
      r.stamp = cfg.t0 + (t + 1) * dt_sec;
      r.accum_mm = out.rain_mm.at(t, cell);
      r.interval_min = cfg.dt_min;
      out.readings.push_back(std::move(r));
    }
  }

  // Satellite: hourly truth cumulates scaled by a constant low bias, covering
  // every cell-hour.
  const SpaceTimeField hourly = hourly_totals(out.rain_mm);
  for (int h = 0; h < hourly.T; ++h) {
    for (int p = 0; p < P; ++p) {
      const CellIndex c = cfg.grid.cell_of(p);
      SatelliteCellHour rec;
      rec.row = c.row;
      rec.col = c.col;
      rec.hour_start = hourly.interval_start(h);
      rec.rain_mm = cfg.satellite_scale * hourly.at(h, p);
      out.satellite.push_back(rec);
    }
  }
  return out;
}

}  // namespace stormrain
