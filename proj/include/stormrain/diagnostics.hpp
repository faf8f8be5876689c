#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stormrain/error.hpp"
#include "stormrain/mcmc.hpp"
#include "stormrain/rng.hpp"
#include "stormrain/stats.hpp"

namespace stormrain {

namespace detail {

struct ChainMoments {
  double between = 0.0;  // B: n * variance of the chain means
  double within = 0.0;   // W: mean within-chain sample variance
  int chains = 0;
  int length = 0;
};

inline ChainMoments chain_moments(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) {
    throw std::invalid_argument("convergence diagnostics need at least two chains");
  }
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) {
      throw std::invalid_argument("chains must have equal length");
    }
  }
  if (n < 10) {
    throw std::invalid_argument("chains must hold at least 10 draws");
  }

  ChainMoments mo;
  mo.chains = static_cast<int>(chains.size());
  mo.length = static_cast<int>(n);
  std::vector<double> means;
  means.reserve(chains.size());
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    mo.within += sample_variance(c) / static_cast<double>(chains.size());
  }
  mo.between = static_cast<double>(n) * sample_variance(means);
  return mo;
}

}  // namespace detail

// Potential scale reduction. Exactly 1 when the chains agree perfectly, and
// always >= 1: the between-chain spread only ever inflates the estimate.
inline double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const detail::ChainMoments mo = detail::chain_moments(chains);
  if (mo.between == 0.0) return 1.0;
  return std::sqrt(1.0 + mo.between / ((mo.length - 1) * mo.within));
}

// Effective draw count from the same moments, capped at the pooled size.
inline double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  const detail::ChainMoments mo = detail::chain_moments(chains);
  const double pooled = static_cast<double>(mo.chains) * mo.length;
  if (mo.between == 0.0) return pooled;
  const double var_plus = (mo.length - 1.0) / mo.length * mo.within +
                          mo.between / mo.length;
  return std::min(pooled, pooled * var_plus / mo.between);
}

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q2_5 = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double q97_5 = 0.0;
  double rhat = std::numeric_limits<double>::quiet_NaN();
  double n_eff = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<ParamSummary> summarize(const PosteriorDraws& draws) {
  std::vector<ParamSummary> table;
  table.reserve(draws.names.size());
  for (std::size_t p = 0; p < draws.names.size(); ++p) {
    const auto& chains = draws.draws[p];
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    if (pooled.empty()) throw DataError("no draws to summarize");

    ParamSummary s;
    s.name = draws.names[p];
    s.mean = mean_of(pooled);
    s.sd = pooled.size() > 1 ? sample_sd(pooled) : 0.0;
    std::sort(pooled.begin(), pooled.end());
    s.q2_5 = quantile_sorted(pooled, 0.025);
    s.q25 = quantile_sorted(pooled, 0.25);
    s.q50 = quantile_sorted(pooled, 0.50);
    s.q75 = quantile_sorted(pooled, 0.75);
    s.q97_5 = quantile_sorted(pooled, 0.975);
    if (chains.size() >= 2 && chains.front().size() >= 10) {
      s.rhat = gelman_rubin(chains);
      s.n_eff = effective_sample_size(chains);
    }
    table.push_back(std::move(s));
  }
  return table;
}

// Deviance information criterion: mean deviance plus the effective parameter
// count p_D = mean deviance - deviance at the posterior means.
inline double dic(const std::vector<double>& deviance_draws,
                  double deviance_at_means) {
  if (deviance_draws.empty()) {
    throw std::invalid_argument("DIC needs at least one deviance draw");
  }
  const double mean_dev = mean_of(deviance_draws);
  return 2.0 * mean_dev - deviance_at_means;
}

inline double dic(const PosteriorDraws& draws) {
  std::vector<double> pooled;
  for (const auto& chain : draws.chains_of("deviance")) {
    pooled.insert(pooled.end(), chain.begin(), chain.end());
  }
  return dic(pooled, draws.deviance_at_means);
}

struct CellSplit {
  std::vector<int> train;
  std::vector<int> validation;
};

// Deterministic train/validation split of the gauged cells: shuffle a sorted
// copy with a seed-derived stream and cut off round(fraction * n) cells,
// always leaving at least one cell on each side.
inline CellSplit split_cells(const std::vector<int>& gauged_cells,
                             double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0) || !(val_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1)");
  }
  std::vector<int> cells(gauged_cells);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  const int n = static_cast<int>(cells.size());
  if (n < 2) throw DataError("need at least two gauged cells to split");

  Rng rng(derive_seed(seed, "split", 0));
  for (int i = n - 1; i > 0; --i) {
    const int j = std::min(
        i, static_cast<int>(rng.uniform01() * static_cast<double>(i + 1)));
    std::swap(cells[static_cast<std::size_t>(i)],
              cells[static_cast<std::size_t>(j)]);
  }

  int n_val = static_cast<int>(std::lround(val_fraction * n));
  n_val = std::clamp(n_val, 1, n - 1);

  CellSplit split;
  split.validation.assign(cells.begin(), cells.begin() + n_val);
  split.train.assign(cells.begin() + n_val, cells.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

}  // namespace stormrain
