#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "stormrain/car.hpp"
#include "stormrain/censor.hpp"
#include "stormrain/error.hpp"
#include "stormrain/field.hpp"
#include "stormrain/meanfield.hpp"
#include "stormrain/rng.hpp"

namespace stormrain {

// Scalar parameters of the hierarchical rainfall model. Precisions follow the
// sampler's inverse-variance convention; the kernel rates only matter for the
// velocity-scaled mean variants.
struct ModelParams {
  double alpha = 0.5;     // temporal autoregression coefficient
  double prec_eta = 1.0;  // innovation precision of the temporal effect
  double prec_s = 1.0;    // precision scale of the spatial effect
  double rho_s = 0.0;     // spatial association, in [0, 1/max_degree)
  double prec_y = 1.0;    // observation precision
  MeanParams kernel{};    // a,b (storm-area variant) or b1,b2 (velocity variant)
};

struct Priors {
  double alpha_mean = 0.5;
  double alpha_sd = 100.0;
  double gamma_shape = 0.001;  // shared by every precision and rate prior
  double gamma_rate = 0.001;
};

// Which blocks the sampler updates. A disabled block stays frozen at its
// starting value, which is how the conjugate sub-model checks isolate one
// full conditional at a time.
struct SampleFlags {
  bool temporal = true;  // the Tt sweep; also gates alpha and prec_eta
  bool spatial = true;   // the Sp sweep; also gates prec_s and rho_s
  bool alpha = true;
  bool prec_eta = true;
  bool prec_s = true;
  bool rho = true;
  bool prec_y = true;
  bool kernel = true;
};

struct McmcConfig {
  int chains = 2;
  int iterations = 20000;
  int burnin = 5000;
  int thin = 15;
  std::uint64_t seed = 0;
  double rho_step = 0.0;     // <= 0 picks 0.1 / max_degree
  double kernel_step = 0.3;  // log-scale random-walk step for kernel rates
  Priors priors{};
  SampleFlags sample{};
  // When set, every chain starts exactly here. Otherwise starting points are
  // drawn from mild reference distributions, dispersed by the chain seed.
  std::optional<ModelParams> init{};
};

struct CensoredObs {
  int t = 0;
  int cell = 0;  // grid linear id
  Observation obs{};
};

struct FitInput {
  MeanVariant variant{};
  MeanContext ctx;
  std::vector<int> domain;  // cells carrying a spatial effect
  std::vector<CensoredObs> observations;
  Discretization discretization{};
};

struct PosteriorDraws {
  std::vector<std::string> names;  // scalar parameters, deviance last
  // draws[param][chain][kept iteration]
  std::vector<std::vector<std::vector<double>>> draws;
  // effect snapshots: temporal[chain][kept][t], spatial[chain][kept][cell idx]
  std::vector<std::vector<std::vector<double>>> temporal;
  std::vector<std::vector<std::vector<double>>> spatial;

  std::vector<int> domain;  // ascending cell ids matching the spatial columns
  int horizon = 0;          // number of intervals covered by the temporal effect
  MeanVariant variant{};

  ModelParams posterior_mean{};
  std::vector<double> temporal_mean;
  std::vector<double> spatial_mean;
  double deviance_at_means = 0.0;

  McmcConfig config{};
  std::vector<std::uint64_t> chain_seeds;

  int chain_count() const {
    return draws.empty() ? 0 : static_cast<int>(draws.front().size());
  }
  int kept() const {
    if (chain_count() == 0) return 0;
    return static_cast<int>(draws.front().front().size());
  }
  const std::vector<std::vector<double>>& chains_of(std::string_view name) const {
    for (std::size_t p = 0; p < names.size(); ++p) {
      if (names[p] == name) return draws[p];
    }
    throw std::invalid_argument("unknown parameter: " + std::string(name));
  }
};

namespace detail {

inline constexpr double kLog2Pi = 1.8378770664093453;

// Flattened observation bookkeeping shared by every chain.
struct ObsLayout {
  std::vector<int> t;            // interval index per observation
  std::vector<int> cell;         // grid linear id
  std::vector<int> site;         // index into the modeled-cell list
  std::vector<double> value;     // log-scale reading used by the likelihood
  std::vector<double> lo, hi;    // latent bounds (plateau observations only)
  std::vector<int> plateau_obs;  // indices of the censored readings
  std::vector<std::vector<int>> by_time;  // per interval
  std::vector<std::vector<int>> by_site;  // per modeled cell
  int count() const { return static_cast<int>(t.size()); }
};

inline ObsLayout layout_observations(const FitInput& in, const CarStructure& car,
                                     int horizon) {
  if (in.observations.empty()) {
    throw DataError("cannot fit a model without training observations");
  }
  std::vector<int> site_of(static_cast<std::size_t>(in.ctx.lightning.grid.size()),
                           -1);
  for (int i = 0; i < car.size(); ++i) {
    site_of[static_cast<std::size_t>(car.cells[static_cast<std::size_t>(i)])] = i;
  }

  ObsLayout lay;
  lay.by_time.resize(static_cast<std::size_t>(horizon));
  lay.by_site.resize(static_cast<std::size_t>(car.size()));
  for (const CensoredObs& o : in.observations) {
    if (o.t < 0 || o.t >= horizon) {
      throw std::invalid_argument("observation interval outside the field");
    }
    if (o.cell < 0 || o.cell >= in.ctx.lightning.grid.size() ||
        site_of[static_cast<std::size_t>(o.cell)] < 0) {
      throw std::invalid_argument("observation cell outside the modeled domain");
    }
    const int i = lay.count();
    lay.t.push_back(o.t);
    lay.cell.push_back(o.cell);
    lay.site.push_back(site_of[static_cast<std::size_t>(o.cell)]);
    lay.value.push_back(o.obs.value);
    if (o.obs.is_plateau()) {
      lay.lo.push_back(in.discretization.lower_log(o.obs.plateau));
      lay.hi.push_back(in.discretization.upper_log(o.obs.plateau));
      lay.plateau_obs.push_back(i);
    } else {
      lay.lo.push_back(0.0);
      lay.hi.push_back(0.0);
    }
    lay.by_time[static_cast<std::size_t>(o.t)].push_back(i);
    lay.by_site[static_cast<std::size_t>(lay.site.back())].push_back(i);
  }
  return lay;
}

inline bool samples_kernel(const FitInput& in, const McmcConfig& cfg) {
  return cfg.sample.kernel && (in.variant.kind == MeanKind::M2 ||
                               in.variant.kind == MeanKind::M3);
}

inline std::vector<double> mu_at_observations(const FitInput& in,
                                              const ObsLayout& lay,
                                              const MeanParams& kernel) {
  const SpaceTimeField f = mean_field(in.variant, in.ctx, kernel);
  std::vector<double> mu(static_cast<std::size_t>(lay.count()));
  for (int i = 0; i < lay.count(); ++i) {
    mu[static_cast<std::size_t>(i)] =
        f.at(lay.t[static_cast<std::size_t>(i)],
             lay.cell[static_cast<std::size_t>(i)]);
  }
  return mu;
}

struct ChainResult {
  std::vector<std::vector<double>> scalars;  // [param][kept]
  std::vector<std::vector<double>> temporal;  // [kept][t]
  std::vector<std::vector<double>> spatial;   // [kept][site]
};

class ChainRunner {
 public:
  ChainRunner(const FitInput& in, const McmcConfig& cfg, const ObsLayout& lay,
              const CarStructure& car, const std::vector<double>* shared_mu,
              int horizon, int chain, std::uint64_t seed)
      : in_(in),
        cfg_(cfg),
        lay_(lay),
        car_(car),
        shared_mu_(shared_mu),
        horizon_(horizon),
        chain_(chain),
        rng_(seed) {}

  ChainResult run() {
    initialize();
    const int kept = kept_count(cfg_);
    ChainResult out;
    out.scalars.assign(scalar_count(), {});
    for (auto& v : out.scalars) v.reserve(static_cast<std::size_t>(kept));
    out.temporal.reserve(static_cast<std::size_t>(kept));
    out.spatial.reserve(static_cast<std::size_t>(kept));

    for (int iter = 0; iter < cfg_.iterations; ++iter) {
      sweep(iter);
      if (iter >= cfg_.burnin && (iter - cfg_.burnin) % cfg_.thin == 0) {
        record(out, iter);
      }
    }
    return out;
  }

  static int kept_count(const McmcConfig& cfg) {
    return (cfg.iterations - cfg.burnin - 1) / cfg.thin + 1;
  }

 private:
  int scalar_count() const {
    return 6 + (samples_kernel_names() ? 2 : 0);
  }
  bool samples_kernel_names() const {
    return in_.variant.kind == MeanKind::M2 || in_.variant.kind == MeanKind::M3;
  }

  void initialize() {
    if (cfg_.init) {
      p_ = *cfg_.init;
    } else {
      p_.alpha = rng_.normal(0.5, 0.25);
      p_.prec_eta = rng_.gamma(2.0, 2.0);
      p_.prec_s = rng_.gamma(2.0, 2.0);
      p_.prec_y = rng_.gamma(2.0, 2.0);
      p_.rho_s = car_.max_degree > 0 ? rng_.uniform(0.0, car_.rho_limit()) : 0.0;
      p_.kernel.a = std::exp(0.3 * rng_.normal());
      p_.kernel.b = std::exp(0.3 * rng_.normal());
      p_.kernel.b1 = std::exp(0.3 * rng_.normal());
      p_.kernel.b2 = std::exp(0.3 * rng_.normal());
    }
    tt_.assign(static_cast<std::size_t>(horizon_), 0.0);
    s_.assign(static_cast<std::size_t>(car_.size()), 0.0);
    y_ = lay_.value;  // plateau entries start at the representative value
    if (shared_mu_ != nullptr) {
      mu_ = *shared_mu_;
    } else {
      mu_ = mu_at_observations(in_, lay_, p_.kernel);
    }
  }

  void sweep(int iter) {
    draw_latents();
    if (cfg_.sample.temporal) {
      temporal_sweep(iter);
      if (cfg_.sample.alpha) update_alpha(iter);
      if (cfg_.sample.prec_eta) update_prec_eta(iter);
    }
    if (cfg_.sample.spatial) {
      spatial_sweep(iter);
      if (cfg_.sample.prec_s) update_prec_s(iter);
      if (cfg_.sample.rho) update_rho();
    }
    if (cfg_.sample.prec_y) update_prec_y(iter);
    if (samples_kernel(in_, cfg_)) update_kernel();
  }

  void draw_latents() {
    const double sd = 1.0 / std::sqrt(p_.prec_y);
    for (const int i : lay_.plateau_obs) {
      const std::size_t k = static_cast<std::size_t>(i);
      const double m = mu_[k] + tt_[static_cast<std::size_t>(lay_.t[k])] +
                       s_[static_cast<std::size_t>(lay_.site[k])];
      y_[k] = rng_.truncated_normal(m, sd, lay_.lo[k], lay_.hi[k]);
    }
  }

  void temporal_sweep(int iter) {
    double sum = 0.0;
    for (int t = 0; t < horizon_; ++t) {
      const std::size_t tu = static_cast<std::size_t>(t);
      const bool interior = t + 1 < horizon_;
      double prec = p_.prec_eta * (1.0 + (interior ? p_.alpha * p_.alpha : 0.0));
      double pm = 0.0;
      if (t > 0) pm += p_.prec_eta * p_.alpha * tt_[tu - 1];
      if (interior) pm += p_.prec_eta * p_.alpha * tt_[tu + 1];
      for (const int i : lay_.by_time[tu]) {
        const std::size_t k = static_cast<std::size_t>(i);
        pm += p_.prec_y *
              (y_[k] - mu_[k] - s_[static_cast<std::size_t>(lay_.site[k])]);
        prec += p_.prec_y;
      }
      tt_[tu] = rng_.normal(pm / prec, 1.0 / std::sqrt(prec));
      sum += tt_[tu];
    }
    ensure_finite(sum, iter, "temporal effect");
  }

  void update_alpha(int iter) {
    double prec = 1.0 / (cfg_.priors.alpha_sd * cfg_.priors.alpha_sd);
    double pm = prec * cfg_.priors.alpha_mean;
    for (int t = 1; t < horizon_; ++t) {
      const double prev = tt_[static_cast<std::size_t>(t - 1)];
      prec += p_.prec_eta * prev * prev;
      pm += p_.prec_eta * prev * tt_[static_cast<std::size_t>(t)];
    }
    p_.alpha = rng_.normal(pm / prec, 1.0 / std::sqrt(prec));
    ensure_finite(p_.alpha, iter, "alpha");
  }

  void update_prec_eta(int iter) {
    double ss = tt_.empty() ? 0.0 : tt_[0] * tt_[0];
    for (int t = 1; t < horizon_; ++t) {
      const double e = tt_[static_cast<std::size_t>(t)] -
                       p_.alpha * tt_[static_cast<std::size_t>(t - 1)];
      ss += e * e;
    }
    p_.prec_eta = rng_.gamma(cfg_.priors.gamma_shape + 0.5 * horizon_,
                             cfg_.priors.gamma_rate + 0.5 * ss);
    ensure_finite(p_.prec_eta, iter, "prec_eta");
  }

  void spatial_sweep(int iter) {
    double sum = 0.0;
    for (int d = 0; d < car_.size(); ++d) {
      const std::size_t du = static_cast<std::size_t>(d);
      double nb = 0.0;
      for (const int j : car_.neighbors[du]) {
        nb += s_[static_cast<std::size_t>(j)];
      }
      double prec = p_.prec_s;
      double pm = p_.prec_s * p_.rho_s * nb;
      for (const int i : lay_.by_site[du]) {
        const std::size_t k = static_cast<std::size_t>(i);
        pm += p_.prec_y *
              (y_[k] - mu_[k] - tt_[static_cast<std::size_t>(lay_.t[k])]);
        prec += p_.prec_y;
      }
      s_[du] = rng_.normal(pm / prec, 1.0 / std::sqrt(prec));
      sum += s_[du];
    }
    ensure_finite(sum, iter, "spatial effect");
  }

  // S' B S, with each neighbour pair contributing twice.
  double spatial_cross() const {
    double cross = 0.0;
    for (int d = 0; d < car_.size(); ++d) {
      const std::size_t du = static_cast<std::size_t>(d);
      for (const int j : car_.neighbors[du]) {
        cross += s_[du] * s_[static_cast<std::size_t>(j)];
      }
    }
    return cross;
  }

  void update_prec_s(int iter) {
    double ss = 0.0;
    for (const double v : s_) ss += v * v;
    const double quad = std::max(ss - p_.rho_s * spatial_cross(), 0.0);
    p_.prec_s = rng_.gamma(cfg_.priors.gamma_shape + 0.5 * car_.size(),
                           cfg_.priors.gamma_rate + 0.5 * quad);
    ensure_finite(p_.prec_s, iter, "prec_s");
  }

  void update_rho() {
    if (car_.max_degree == 0) return;  // no neighbours: association unidentified
    const double limit = car_.rho_limit();
    const double step = cfg_.rho_step > 0.0 ? cfg_.rho_step : 0.1 * limit;
    const double prop = p_.rho_s + step * rng_.normal();
    if (prop < 0.0 || prop >= limit) return;
    const double delta = 0.5 * (car_logdet(car_, prop) - car_logdet(car_, p_.rho_s)) +
                         0.5 * p_.prec_s * (prop - p_.rho_s) * spatial_cross();
    if (std::log(rng_.uniform01()) < delta) p_.rho_s = prop;
  }

  void update_prec_y(int iter) {
    double ss = 0.0;
    for (int i = 0; i < lay_.count(); ++i) {
      const double r = residual(i);
      ss += r * r;
    }
    p_.prec_y = rng_.gamma(cfg_.priors.gamma_shape + 0.5 * lay_.count(),
                           cfg_.priors.gamma_rate + 0.5 * ss);
    ensure_finite(p_.prec_y, iter, "prec_y");
  }

  double residual(int i) const {
    const std::size_t k = static_cast<std::size_t>(i);
    return y_[k] - mu_[k] - tt_[static_cast<std::size_t>(lay_.t[k])] -
           s_[static_cast<std::size_t>(lay_.site[k])];
  }

  double log_likelihood(const std::vector<double>& mu) const {
    double ss = 0.0;
    for (int i = 0; i < lay_.count(); ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      const double r = y_[k] - mu[k] - tt_[static_cast<std::size_t>(lay_.t[k])] -
                       s_[static_cast<std::size_t>(lay_.site[k])];
      ss += r * r;
    }
    return -0.5 * p_.prec_y * ss;
  }

  void update_kernel() {
    const bool storm_area = in_.variant.kind == MeanKind::M2;
    kernel_step(storm_area ? &MeanParams::a : &MeanParams::b1);
    kernel_step(storm_area ? &MeanParams::b : &MeanParams::b2);
  }

  void kernel_step(double MeanParams::*field) {
    const double cur = p_.kernel.*field;
    const double u = std::log(cur);
    const double u_prop = u + cfg_.kernel_step * rng_.normal();
    const double x_prop = std::exp(u_prop);
    if (!(x_prop > 0.0) || !std::isfinite(x_prop)) return;
    MeanParams kp = p_.kernel;
    kp.*field = x_prop;
    std::vector<double> mu_prop;
    try {
      mu_prop = mu_at_observations(in_, lay_, kp);
    } catch (const NumericError&) {
      return;  // proposal drove the mean out of range
    }
    // Gamma prior on the natural scale plus the log-transform Jacobian.
    const double delta = cfg_.priors.gamma_shape * (u_prop - u) -
                         cfg_.priors.gamma_rate * (x_prop - cur) +
                         log_likelihood(mu_prop) - log_likelihood(mu_);
    if (std::log(rng_.uniform01()) < delta) {
      p_.kernel = kp;
      mu_ = std::move(mu_prop);
    }
  }

  // -2 log-likelihood of the censored data, plateau readings entering at
  // their representative log values.
  double deviance() const {
    double dev = 0.0;
    const double log_prec = std::log(p_.prec_y);
    for (int i = 0; i < lay_.count(); ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      const double m = mu_[k] + tt_[static_cast<std::size_t>(lay_.t[k])] +
                       s_[static_cast<std::size_t>(lay_.site[k])];
      const double r = lay_.value[k] - m;
      dev += kLog2Pi - log_prec + p_.prec_y * r * r;
    }
    return dev;
  }

  void record(ChainResult& out, int iter) {
    const double dev = deviance();
    ensure_finite(dev, iter, "deviance");
    std::size_t p = 0;
    out.scalars[p++].push_back(p_.alpha);
    out.scalars[p++].push_back(p_.prec_eta);
    out.scalars[p++].push_back(p_.prec_s);
    out.scalars[p++].push_back(p_.rho_s);
    out.scalars[p++].push_back(p_.prec_y);
    if (samples_kernel_names()) {
      if (in_.variant.kind == MeanKind::M2) {
        out.scalars[p++].push_back(p_.kernel.a);
        out.scalars[p++].push_back(p_.kernel.b);
      } else {
        out.scalars[p++].push_back(p_.kernel.b1);
        out.scalars[p++].push_back(p_.kernel.b2);
      }
    }
    out.scalars[p++].push_back(dev);
    out.temporal.push_back(tt_);
    out.spatial.push_back(s_);
  }

  void ensure_finite(double v, int iter, const char* what) const {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value for " + std::string(what) +
                         " at iteration " + std::to_string(iter) + " (chain " +
                         std::to_string(chain_) + ")");
    }
  }

  const FitInput& in_;
  const McmcConfig& cfg_;
  const ObsLayout& lay_;
  const CarStructure& car_;
  const std::vector<double>* shared_mu_;
  int horizon_;
  int chain_;
  Rng rng_;

  ModelParams p_{};
  std::vector<double> tt_, s_, y_, mu_;
};

}  // namespace detail

inline void validate_mcmc_config(const McmcConfig& cfg) {
  if (cfg.chains < 1) throw std::invalid_argument("need at least one chain");
  if (cfg.iterations <= 0) {
    throw std::invalid_argument("iteration count must be positive");
  }
  if (cfg.burnin < 0 || cfg.burnin >= cfg.iterations) {
    throw std::invalid_argument("burn-in must lie inside the iteration count");
  }
  if (cfg.thin < 1) throw std::invalid_argument("thinning stride must be >= 1");
  if (!(cfg.priors.alpha_sd > 0.0) || !(cfg.priors.gamma_shape > 0.0) ||
      !(cfg.priors.gamma_rate > 0.0)) {
    throw std::invalid_argument("prior scale parameters must be positive");
  }
  if (cfg.init) {
    const ModelParams& p = *cfg.init;
    if (!(p.prec_eta > 0.0) || !(p.prec_s > 0.0) || !(p.prec_y > 0.0)) {
      throw std::invalid_argument("initial precisions must be positive");
    }
    if (!(p.kernel.a > 0.0) || !(p.kernel.b > 0.0) || !(p.kernel.b1 > 0.0) ||
        !(p.kernel.b2 > 0.0)) {
      throw std::invalid_argument("initial kernel rates must be positive");
    }
  }
}

inline PosteriorDraws fit(const FitInput& in, const McmcConfig& cfg) {
  validate_mcmc_config(cfg);
  detail::validate_variant(in.variant);
  const int horizon = in.ctx.lightning.T;
  const CarStructure car = car_structure(in.ctx.lightning.grid, in.domain);
  if (cfg.init) check_rho(car, cfg.init->rho_s);
  const detail::ObsLayout lay = detail::layout_observations(in, car, horizon);

  // Mean fields that do not depend on sampled kernel rates are shared by all
  // chains; the velocity variants recompute per chain as rates move.
  std::vector<double> shared_mu;
  const bool kernel_varies = in.variant.kind == MeanKind::M2 ||
                             in.variant.kind == MeanKind::M3;
  if (!kernel_varies) {
    shared_mu = detail::mu_at_observations(in, lay, MeanParams{});
  }

  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.chains));
  for (int c = 0; c < cfg.chains; ++c) {
    seeds[static_cast<std::size_t>(c)] =
        derive_seed(cfg.seed, "chain", static_cast<std::uint64_t>(c));
  }

  std::vector<detail::ChainResult> results(static_cast<std::size_t>(cfg.chains));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(cfg.chains));
  {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(cfg.chains));
    for (int c = 0; c < cfg.chains; ++c) {
      pool.emplace_back([&, c] {
        const std::size_t cu = static_cast<std::size_t>(c);
        try {
          detail::ChainRunner runner(in, cfg, lay, car,
                                     kernel_varies ? nullptr : &shared_mu,
                                     horizon, c, seeds[cu]);
          results[cu] = runner.run();
        } catch (...) {
          failures[cu] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const std::exception_ptr& e : failures) {
    if (e) std::rethrow_exception(e);
  }

  PosteriorDraws out;
  out.names = {"alpha", "prec_eta", "prec_s", "rho_s", "prec_y"};
  if (kernel_varies) {
    if (in.variant.kind == MeanKind::M2) {
      out.names.insert(out.names.end(), {"a", "b"});
    } else {
      out.names.insert(out.names.end(), {"b1", "b2"});
    }
  }
  out.names.push_back("deviance");

  out.draws.assign(out.names.size(), {});
  for (std::size_t p = 0; p < out.names.size(); ++p) {
    out.draws[p].resize(static_cast<std::size_t>(cfg.chains));
    for (int c = 0; c < cfg.chains; ++c) {
      out.draws[p][static_cast<std::size_t>(c)] =
          std::move(results[static_cast<std::size_t>(c)].scalars[p]);
    }
  }
  out.temporal.resize(static_cast<std::size_t>(cfg.chains));
  out.spatial.resize(static_cast<std::size_t>(cfg.chains));
  for (int c = 0; c < cfg.chains; ++c) {
    out.temporal[static_cast<std::size_t>(c)] =
        std::move(results[static_cast<std::size_t>(c)].temporal);
    out.spatial[static_cast<std::size_t>(c)] =
        std::move(results[static_cast<std::size_t>(c)].spatial);
  }
  out.domain = car.cells;
  out.horizon = horizon;
  out.variant = in.variant;
  out.config = cfg;
  out.chain_seeds = seeds;

  const auto pooled_mean = [&](std::string_view name) {
    const auto& chains = out.chains_of(name);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& chain : chains) {
      for (const double v : chain) sum += v;
      n += chain.size();
    }
    return sum / static_cast<double>(n);
  };
  out.posterior_mean.alpha = pooled_mean("alpha");
  out.posterior_mean.prec_eta = pooled_mean("prec_eta");
  out.posterior_mean.prec_s = pooled_mean("prec_s");
  out.posterior_mean.rho_s = pooled_mean("rho_s");
  out.posterior_mean.prec_y = pooled_mean("prec_y");
  if (kernel_varies) {
    if (in.variant.kind == MeanKind::M2) {
      out.posterior_mean.kernel.a = pooled_mean("a");
      out.posterior_mean.kernel.b = pooled_mean("b");
    } else {
      out.posterior_mean.kernel.b1 = pooled_mean("b1");
      out.posterior_mean.kernel.b2 = pooled_mean("b2");
    }
  }

  const int kept = out.kept();
  const double total = static_cast<double>(kept * cfg.chains);
  out.temporal_mean.assign(static_cast<std::size_t>(horizon), 0.0);
  out.spatial_mean.assign(static_cast<std::size_t>(car.size()), 0.0);
  for (int c = 0; c < cfg.chains; ++c) {
    const std::size_t cu = static_cast<std::size_t>(c);
    for (int k = 0; k < kept; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      for (int t = 0; t < horizon; ++t) {
        out.temporal_mean[static_cast<std::size_t>(t)] +=
            out.temporal[cu][ku][static_cast<std::size_t>(t)] / total;
      }
      for (int d = 0; d < car.size(); ++d) {
        out.spatial_mean[static_cast<std::size_t>(d)] +=
            out.spatial[cu][ku][static_cast<std::size_t>(d)] / total;
      }
    }
  }

  const std::vector<double> mu_mean =
      kernel_varies ? detail::mu_at_observations(in, lay, out.posterior_mean.kernel)
                    : shared_mu;
  double dev = 0.0;
  const double log_prec = std::log(out.posterior_mean.prec_y);
  for (int i = 0; i < lay.count(); ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const double m = mu_mean[k] +
                     out.temporal_mean[static_cast<std::size_t>(lay.t[k])] +
                     out.spatial_mean[static_cast<std::size_t>(lay.site[k])];
    const double r = lay.value[k] - m;
    dev += detail::kLog2Pi - log_prec + out.posterior_mean.prec_y * r * r;
  }
  out.deviance_at_means = dev;
  return out;
}

}  // namespace stormrain
