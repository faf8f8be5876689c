#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stormrain/censor.hpp"
#include "stormrain/error.hpp"
#include "stormrain/mcmc.hpp"
#include "stormrain/rng.hpp"
#include "stormrain/stats.hpp"

namespace stormrain {

struct PredictTarget {
  int t = 0;
  int cell = 0;  // grid linear id
};

// One row of the posterior predictive, on the log-latent scale and after the
// back-transform x = exp(Y) - 1 clamped at zero.
struct PredictionSummary {
  int t = 0;
  int cell = 0;
  int draw_count = 0;
  double mean_log = 0.0, sd_log = 0.0, lo_log = 0.0, hi_log = 0.0;
  double mean_mm = 0.0, sd_mm = 0.0, lo_mm = 0.0, hi_mm = 0.0;
};

// One predictive sample per posterior draw per target. The mean surface is
// rebuilt per draw when the variant carries sampled kernel rates; otherwise
// it is computed once and shared.
inline std::vector<std::vector<double>> predictive_draws(
    const PosteriorDraws& post, const MeanContext& ctx,
    const std::vector<PredictTarget>& targets, std::uint64_t seed) {
  if (targets.empty()) throw std::invalid_argument("no prediction targets");
  if (post.chain_count() == 0 || post.kept() == 0) {
    throw DataError("posterior holds no draws");
  }
  if (ctx.lightning.T != post.horizon) {
    throw std::invalid_argument("context span does not match the fitted span");
  }

  const Grid& grid = ctx.lightning.grid;
  std::vector<int> site_of(static_cast<std::size_t>(grid.size()), -1);
  for (std::size_t i = 0; i < post.domain.size(); ++i) {
    site_of[static_cast<std::size_t>(post.domain[i])] = static_cast<int>(i);
  }
  std::vector<int> sites;
  sites.reserve(targets.size());
  for (const PredictTarget& tg : targets) {
    if (tg.t < 0 || tg.t >= post.horizon) {
      throw std::invalid_argument("prediction target outside the fitted span");
    }
    if (tg.cell < 0 || tg.cell >= grid.size() ||
        site_of[static_cast<std::size_t>(tg.cell)] < 0) {
      throw std::invalid_argument("prediction target outside the modeled domain");
    }
    sites.push_back(site_of[static_cast<std::size_t>(tg.cell)]);
  }

  const bool kernel_varies = post.variant.kind == MeanKind::M2 ||
                             post.variant.kind == MeanKind::M3;
  std::vector<double> mu(targets.size(), 0.0);
  if (!kernel_varies) {
    const SpaceTimeField f = mean_field(post.variant, ctx, MeanParams{});
    for (std::size_t i = 0; i < targets.size(); ++i) {
      mu[i] = f.at(targets[i].t, targets[i].cell);
    }
  }

  const auto& prec_y = post.chains_of("prec_y");
  const std::vector<std::vector<double>>* first = nullptr;
  const std::vector<std::vector<double>>* second = nullptr;
  if (kernel_varies) {
    const bool storm_area = post.variant.kind == MeanKind::M2;
    first = &post.chains_of(storm_area ? "a" : "b1");
    second = &post.chains_of(storm_area ? "b" : "b2");
  }

  Rng rng(derive_seed(seed, "predict", 0));
  const int chains = post.chain_count();
  const int kept = post.kept();
  std::vector<std::vector<double>> out(targets.size());
  for (auto& v : out) v.reserve(static_cast<std::size_t>(chains * kept));

  for (int c = 0; c < chains; ++c) {
    const std::size_t cu = static_cast<std::size_t>(c);
    for (int k = 0; k < kept; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      if (kernel_varies) {
        MeanParams kp;
        if (post.variant.kind == MeanKind::M2) {
          kp.a = (*first)[cu][ku];
          kp.b = (*second)[cu][ku];
        } else {
          kp.b1 = (*first)[cu][ku];
          kp.b2 = (*second)[cu][ku];
        }
        const SpaceTimeField f = mean_field(post.variant, ctx, kp);
        for (std::size_t i = 0; i < targets.size(); ++i) {
          mu[i] = f.at(targets[i].t, targets[i].cell);
        }
      }
      const double sd = 1.0 / std::sqrt(prec_y[cu][ku]);
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const double m =
            mu[i] +
            post.temporal[cu][ku][static_cast<std::size_t>(targets[i].t)] +
            post.spatial[cu][ku][static_cast<std::size_t>(sites[i])];
        out[i].push_back(rng.normal(m, sd));
      }
    }
  }
  return out;
}

inline double rain_mm_from_log(double y) { return std::max(0.0, std::expm1(y)); }

// Equal-tailed credible interval plus moments, on both scales. The mm scale
// transforms every draw first; because the transform is monotone the mm
// quantiles coincide with transformed log quantiles.
inline PredictionSummary summarize(const std::vector<double>& samples,
                                   double level = 0.9) {
  if (!(level > 0.0) || !(level < 1.0)) {
    throw std::invalid_argument("credible level must lie in (0, 1)");
  }
  if (samples.empty()) throw DataError("no predictive samples to summarize");

  PredictionSummary s;
  s.draw_count = static_cast<int>(samples.size());
  s.mean_log = mean_of(samples);
  s.sd_log = samples.size() > 1 ? sample_sd(samples) : 0.0;

  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  const double tail = 0.5 * (1.0 - level);
  s.lo_log = quantile_sorted(sorted, tail);
  s.hi_log = quantile_sorted(sorted, 1.0 - tail);

  std::vector<double> mm(sorted.size());
  std::transform(sorted.begin(), sorted.end(), mm.begin(), rain_mm_from_log);
  s.mean_mm = mean_of(mm);
  s.sd_mm = mm.size() > 1 ? sample_sd(mm) : 0.0;
  s.lo_mm = quantile_sorted(mm, tail);
  s.hi_mm = quantile_sorted(mm, 1.0 - tail);
  return s;
}

// Share of held-out readings whose credible interval captures them. Exact
// readings must fall inside [lo, hi] on the log scale; plateau readings count
// as covered when the interval intersects the plateau's censoring interval,
// since the data never pin the latent value more precisely than that.
inline double empirical_coverage(const std::vector<PredictionSummary>& summaries,
                                 const std::vector<double>& observations_mm,
                                 const Discretization& d = {}) {
  if (summaries.size() != observations_mm.size()) {
    throw std::invalid_argument("summaries and observations must pair up");
  }
  long covered = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const double obs_mm = observations_mm[i];
    if (std::isnan(obs_mm)) continue;
    ++pairs;
    const Observation obs = censor(obs_mm, d);
    const double lo = summaries[i].lo_log;
    const double hi = summaries[i].hi_log;
    bool hit;
    if (obs.is_plateau()) {
      hit = lo < d.upper_log(obs.plateau) && hi >= d.lower_log(obs.plateau);
    } else {
      hit = obs.value >= lo && obs.value <= hi;
    }
    if (hit) ++covered;
  }
  if (pairs == 0) throw DataError("no prediction/observation pairs to score");
  return 100.0 * static_cast<double>(covered) / static_cast<double>(pairs);
}

}  // namespace stormrain
