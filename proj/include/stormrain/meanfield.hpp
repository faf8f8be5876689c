#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stormrain/error.hpp"
#include "stormrain/field.hpp"
#include "stormrain/stats.hpp"

namespace stormrain {

// Mean-structure variants for the latent log-rainfall process. M1-M3 gate the
// temporal kernel on the storm's lifetime phase (charging vs mature/decay),
// M4-M5 on per-cell lightning activity, M6 on both. The memory flavor swaps
// the event-wide spatial weights for a running 30-minute window.
enum class MeanKind { M1, M2, M3, M4, M5, M6 };

struct MeanVariant {
  MeanKind kind = MeanKind::M1;
  bool memory = false;
};

inline std::string to_string(MeanKind k) {
  switch (k) {
    case MeanKind::M1: return "M1";
    case MeanKind::M2: return "M2";
    case MeanKind::M3: return "M3";
    case MeanKind::M4: return "M4";
    case MeanKind::M5: return "M5";
    case MeanKind::M6: return "M6";
  }
  throw std::invalid_argument("unknown mean variant");
}

inline MeanKind mean_kind_from_string(const std::string& s) {
  if (s == "M1") return MeanKind::M1;
  if (s == "M2") return MeanKind::M2;
  if (s == "M3") return MeanKind::M3;
  if (s == "M4") return MeanKind::M4;
  if (s == "M5") return MeanKind::M5;
  if (s == "M6") return MeanKind::M6;
  throw std::invalid_argument("unknown mean variant '" + s + "'");
}

// Kernel rate parameters. M2 uses (a, b); M3 uses (b1, b2). The remaining
// variants use fixed unit rates and ignore this struct.
struct MeanParams {
  double a = 1.0;
  double b = 1.0;
  double b1 = 1.0;
  double b2 = 1.0;
};

// Per-cell spatial weights: own-cell share plus 1/8 of the surrounding-ring
// share, normalized by the cell's event-total lightning (own + ring). Cells
// whose total is zero get identically zero weights.
inline std::vector<double> spatial_weights(const SpaceTimeField& counts) {
  const int P = counts.grid.size();
  const int T = counts.T;
  std::vector<double> ring(static_cast<std::size_t>(T) * P, 0.0);
  for (int p = 0; p < P; ++p) {
    const std::vector<int> nb = counts.grid.neighbors(p);
    for (int t = 0; t < T; ++t) {
      double s = 0.0;
      for (const int q : nb) s += counts.at(t, q);
      ring[counts.index(t, p)] = s;
    }
  }
  std::vector<double> out(ring.size(), 0.0);
  for (int p = 0; p < P; ++p) {
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
      total += counts.at(t, p) + ring[counts.index(t, p)];
    }
    if (total <= 0.0) continue;
    for (int t = 0; t < T; ++t) {
      const std::size_t k = counts.index(t, p);
      out[k] = (counts.at(t, p) + ring[k] / 8.0) / total;
    }
  }
  return out;
}

// Running-window variant of the spatial weights: the unnormalized own+ring
// term for the current interval plus the 30 minutes preceding it (one lag at
// 30-minute cadence, two at 15), divided by the cumulative spatial weight up
// to the current interval. Zero cumulative weight yields zero.
inline std::vector<double> memory_weights(const SpaceTimeField& counts) {
  if (counts.dt_min != 15 && counts.dt_min != 30) {
    throw std::invalid_argument("memory weights need a 15 or 30 minute step");
  }
  const int lags = 30 / counts.dt_min;
  const int P = counts.grid.size();
  const int T = counts.T;
  const std::vector<double> omega = spatial_weights(counts);
  std::vector<double> raw(static_cast<std::size_t>(T) * P, 0.0);
  for (int p = 0; p < P; ++p) {
    const std::vector<int> nb = counts.grid.neighbors(p);
    for (int t = 0; t < T; ++t) {
      double s = 0.0;
      for (const int q : nb) s += counts.at(t, q);
      raw[counts.index(t, p)] = counts.at(t, p) + s / 8.0;
    }
  }
  std::vector<double> out(raw.size(), 0.0);
  for (int p = 0; p < P; ++p) {
    double cumulative = 0.0;
    for (int t = 0; t < T; ++t) {
      cumulative += omega[counts.index(t, p)];
      double num = 0.0;
      for (int l = 0; l <= lags; ++l) {
        if (t - l >= 0) num += raw[counts.index(t - l, p)];
      }
      out[counts.index(t, p)] = cumulative > 0.0 ? num / cumulative : 0.0;
    }
  }
  return out;
}

// Active intervals of one cell's lightning series: smoothed count above 5,
// each hit extending activity over the following 30 minutes. A series shorter
// than the smoothing window is wholly inactive.
inline std::vector<std::uint8_t> cell_activity(const std::vector<double>& series,
                                               int dt_min) {
  std::vector<std::uint8_t> active(series.size(), 0);
  if (series.size() < 3) return active;
  if (dt_min != 15 && dt_min != 30) {
    throw std::invalid_argument("cell activity needs a 15 or 30 minute step");
  }
  const std::size_t extend = static_cast<std::size_t>(30 / dt_min);
  const std::vector<double> sm = smooth3(series);
  for (std::size_t i = 0; i < sm.size(); ++i) {
    if (sm[i] > 5.0) {
      const std::size_t hi = std::min(sm.size() - 1, i + extend);
      for (std::size_t j = i; j <= hi; ++j) active[j] = 1;
    }
  }
  return active;
}

inline std::vector<std::uint8_t> field_activity(const SpaceTimeField& counts) {
  const int P = counts.grid.size();
  const int T = counts.T;
  std::vector<std::uint8_t> active(static_cast<std::size_t>(T) * P, 0);
  std::vector<double> series(static_cast<std::size_t>(T));
  for (int p = 0; p < P; ++p) {
    for (int t = 0; t < T; ++t) series[static_cast<std::size_t>(t)] = counts.at(t, p);
    const std::vector<std::uint8_t> a = cell_activity(series, counts.dt_min);
    for (int t = 0; t < T; ++t) active[counts.index(t, p)] = a[static_cast<std::size_t>(t)];
  }
  return active;
}

// Everything mean_field needs besides the sampled kernel rates: the binned
// lightning, the lightning-to-volume scale C, the phase boundary, the event
// velocities, and precomputed spatial/memory weights and the activity map.
struct MeanContext {
  SpaceTimeField lightning;
  double scale_c = 1.0;
  int charge_index = 0;       // last interval of the charging phase
  double v1_m_s = 0.0;
  double v2_m_s = 0.0;
  double v_m_s = 0.0;
  double v_fixed_m_s = 16.1;  // literature propagation speed used by M2
  double cell_area_m2 = 0.0;
  std::vector<std::uint8_t> active;
  std::vector<double> omega;
  std::vector<double> omega_memory;

  bool is_active(int t, int cell) const {
    return active[lightning.index(t, cell)] != 0;
  }
};

inline MeanContext make_mean_context(const SpaceTimeField& counts, double scale_c,
                                     int charge_index, double v1 = 0.0,
                                     double v2 = 0.0, double v = 0.0) {
  if (!(scale_c > 0.0)) throw std::invalid_argument("scale C must be positive");
  if (charge_index < 0 || charge_index >= counts.T) {
    throw std::invalid_argument("charge index outside the field's intervals");
  }
  MeanContext ctx;
  ctx.lightning = counts;
  ctx.scale_c = scale_c;
  ctx.charge_index = charge_index;
  ctx.v1_m_s = v1;
  ctx.v2_m_s = v2;
  ctx.v_m_s = v;
  ctx.cell_area_m2 = counts.grid.cell_area_m2();
  ctx.active = field_activity(counts);
  ctx.omega = spatial_weights(counts);
  ctx.omega_memory = memory_weights(counts);
  return ctx;
}

namespace detail {

struct KernelRates {
  double charging = 1.0;
  double decay = 1.0;
};

inline KernelRates kernel_rates(const MeanVariant& variant, const MeanContext& ctx,
                                const MeanParams& params) {
  KernelRates r;
  if (variant.kind == MeanKind::M2) {
    r.charging = r.decay =
        (params.a + params.b * ctx.v_fixed_m_s) / std::sqrt(ctx.cell_area_m2);
  } else if (variant.kind == MeanKind::M3) {
    if (ctx.v_m_s == 0.0) {
      throw std::invalid_argument("M3 needs a nonzero whole-event velocity");
    }
    r.charging = params.b1 * ctx.v1_m_s / ctx.v_m_s;
    r.decay = params.b2 * ctx.v2_m_s / ctx.v_m_s;
  }
  return r;
}

inline bool phase_gated(MeanKind k) {
  return k == MeanKind::M1 || k == MeanKind::M2 || k == MeanKind::M3 ||
         k == MeanKind::M6;
}

inline bool activity_gated(MeanKind k) {
  return k == MeanKind::M4 || k == MeanKind::M5 || k == MeanKind::M6;
}

// Ungated kernel value for a (prediction, observation) interval pair. The
// time difference counts aggregation steps, so the rates are per step.
inline double kernel_value(MeanKind kind, int t_idx, int i_idx, int charge_index,
                           const KernelRates& rates) {
  const double d = std::abs(static_cast<double>(t_idx - i_idx));
  switch (kind) {
    case MeanKind::M4: return std::exp(-d);
    case MeanKind::M5: return std::exp(-d * d);
    default: break;
  }
  const bool charging = t_idx <= charge_index;
  return charging ? std::exp(-rates.charging * d)
                  : std::exp(-rates.decay * d * d);
}

inline void validate_variant(const MeanVariant& variant) {
  if (variant.memory && activity_gated(variant.kind)) {
    throw std::invalid_argument("memory weights apply to M1-M3 only");
  }
}

}  // namespace detail

// Kernel weight linking prediction interval t_idx to observation interval
// i_idx at a given cell, with the variant's phase/activity gates applied.
inline double temporal_weight(const MeanVariant& variant, int t_idx, int i_idx,
                              int cell, const MeanContext& ctx,
                              const MeanParams& params = {}) {
  detail::validate_variant(variant);
  ctx.lightning.index(t_idx, cell);  // bounds check
  ctx.lightning.index(i_idx, cell);
  if (detail::phase_gated(variant.kind)) {
    const bool a = t_idx <= ctx.charge_index;
    const bool b = i_idx <= ctx.charge_index;
    if (a != b) return 0.0;
  }
  if (detail::activity_gated(variant.kind)) {
    if (!ctx.is_active(t_idx, cell) && !ctx.is_active(i_idx, cell)) return 0.0;
  }
  const detail::KernelRates rates = detail::kernel_rates(variant, ctx, params);
  return detail::kernel_value(variant.kind, t_idx, i_idx, ctx.charge_index, rates);
}

// Log-scale mean field: mu(t,p) = log(C * sum_i L(i,p) w(t,i,p)
//                                    + C * sum_i omega(i,p) gate(t,i,p) + 1).
// The argument of the log never drops below 1, so mu >= 0 with equality
// exactly where no gated lightning contributes.
inline SpaceTimeField mean_field(const MeanVariant& variant, const MeanContext& ctx,
                                 const MeanParams& params = {}) {
  detail::validate_variant(variant);
  if (!(ctx.scale_c > 0.0)) throw std::invalid_argument("scale C must be positive");
  const int T = ctx.lightning.T;
  const int P = ctx.lightning.grid.size();
  if (ctx.charge_index < 0 || ctx.charge_index >= T) {
    throw std::invalid_argument("charge index outside the field's intervals");
  }
  const detail::KernelRates rates = detail::kernel_rates(variant, ctx, params);
  const bool phase = detail::phase_gated(variant.kind);
  const bool gated = detail::activity_gated(variant.kind);
  const std::vector<double>& omega = variant.memory ? ctx.omega_memory : ctx.omega;

  // Per-cell spatial-weight totals. When the activity gate is on, a pair
  // (t,i) passes if either side is active, so the t-dependent total is either
  // the full sum (t active) or the sum over active i only.
  std::vector<double> omega_full(static_cast<std::size_t>(P), 0.0);
  std::vector<double> omega_active(static_cast<std::size_t>(P), 0.0);
  for (int p = 0; p < P; ++p) {
    for (int t = 0; t < T; ++t) {
      const std::size_t k = ctx.lightning.index(t, p);
      omega_full[static_cast<std::size_t>(p)] += omega[k];
      if (gated && ctx.active[k]) {
        omega_active[static_cast<std::size_t>(p)] += omega[k];
      }
    }
  }

  SpaceTimeField mu(ctx.lightning.grid, ctx.lightning.t0, ctx.lightning.dt_min, T,
                    0.0);
  std::vector<double> kernel(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < T; ++i) {
      const bool cross_phase =
          phase && ((t <= ctx.charge_index) != (i <= ctx.charge_index));
      kernel[static_cast<std::size_t>(i)] =
          cross_phase ? 0.0
                      : detail::kernel_value(variant.kind, t, i,
                                             ctx.charge_index, rates);
    }
    for (int p = 0; p < P; ++p) {
      double strike_term = 0.0;
      const bool t_active = gated && ctx.is_active(t, p);
      for (int i = 0; i < T; ++i) {
        const double L = ctx.lightning.at(i, p);
        if (L == 0.0) continue;
        double w = kernel[static_cast<std::size_t>(i)];
        if (gated && !t_active && !ctx.is_active(i, p)) w = 0.0;
        strike_term += L * w;
      }
      double omega_term = omega_full[static_cast<std::size_t>(p)];
      if (gated && !t_active) omega_term = omega_active[static_cast<std::size_t>(p)];
      const double arg =
          ctx.scale_c * strike_term + ctx.scale_c * omega_term + 1.0;
      if (!std::isfinite(arg) || !(arg >= 1.0)) {
        const CellIndex c = ctx.lightning.grid.cell_of(p);
        throw NumericError("non-finite mean at interval " + std::to_string(t) +
                           " cell (" + std::to_string(c.row) + "," +
                           std::to_string(c.col) + ")");
      }
      mu.at(t, p) = std::log(arg);
    }
  }
  return mu;
}

}  // namespace stormrain
