#include "stormrain/pipeline.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stormrain/manifest.hpp"

namespace fs = std::filesystem;
using namespace stormrain;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    dir_ = fs::temp_directory_path() /
           ("stormrain-pipeline-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    fs::create_directories(dir_);
  }
  ~TempDir() { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  const fs::path& root() const { return dir_; }

 private:
  fs::path dir_;
};

KeyValueConfig small_run_config(const TempDir& tmp) {
  KeyValueConfig kv;
  kv.set("lightning_csv", tmp.path("lightning.csv"));
  kv.set("gauges_csv", tmp.path("gauges.csv"));
  kv.set("satellite_csv", tmp.path("satellite.csv"));
  kv.set("out_dir", tmp.path("out"));
  kv.set("cell_size_m", "2000");
  kv.set("n1", "6");
  kv.set("n2", "6");
  kv.set("T", "12");
  kv.set("dt_min", "15");
  kv.set("scan_radius", "0.6");
  kv.set("scan_min_points", "5");
  kv.set("chains", "2");
  kv.set("iters", "60");
  kv.set("burnin", "20");
  kv.set("thin", "4");
  kv.set("seed", "11");
  return kv;
}

std::map<std::string, std::string> hash_tree(const fs::path& root) {
  std::map<std::string, std::string> hashes;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    hashes[fs::relative(entry.path(), root).string()] =
        sha256_file(entry.path().string());
  }
  return hashes;
}

std::size_t data_rows(const std::string& path) {
  CsvReader in(path);
  std::vector<std::string> row;
  std::size_t n = 0;
  while (in.next(row)) ++n;
  return n;
}

}  // namespace

TEST(PipelineConfigTest, AppliesOverridesAndEchoesThem) {
  KeyValueConfig kv;
  kv.set("n1", "4");
  kv.set("n2", "5");
  kv.set("cell_size_m", "1500");
  kv.set("variants", "M1, M3m ,M5");
  kv.set("chains", "3");
  kv.set("prior_alpha_sd", "7.5");
  kv.set("censor_thresholds", "0.1,0.2,0.3,0.4,0.5");
  kv.set("seed", "42");
  const PipelineConfig cfg = pipeline_config(kv);

  EXPECT_EQ(cfg.grid.n1, 4);
  EXPECT_EQ(cfg.grid.n2, 5);
  EXPECT_DOUBLE_EQ(cfg.grid.cell_size_m, 1500.0);
  ASSERT_EQ(cfg.variants.size(), 3u);
  EXPECT_EQ(variant_label(cfg.variants[0]), "M1");
  EXPECT_EQ(variant_label(cfg.variants[1]), "M3m");
  EXPECT_EQ(variant_label(cfg.variants[2]), "M5");
  EXPECT_EQ(cfg.mcmc.chains, 3);
  EXPECT_DOUBLE_EQ(cfg.mcmc.priors.alpha_sd, 7.5);
  EXPECT_EQ(cfg.seed, 42u);

  EXPECT_DOUBLE_EQ(cfg.discretization.thresholds_mm[0], 0.1);
  EXPECT_DOUBLE_EQ(cfg.discretization.thresholds_mm[4], 0.5);
  EXPECT_DOUBLE_EQ(cfg.discretization.plateau_log[0], std::log1p(0.05));
  EXPECT_DOUBLE_EQ(cfg.discretization.plateau_log[2], std::log1p(0.25));

  EXPECT_EQ(cfg.echo.at("variants"), "M1,M3m,M5");
  EXPECT_EQ(cfg.echo.at("n1"), "4");
  EXPECT_EQ(cfg.echo.at("seed"), "42");
  EXPECT_EQ(cfg.echo.at("censor_thresholds"), "0.1,0.2,0.3,0.4,0.5");
}

TEST(PipelineConfigTest, RejectsBrokenSettings) {
  {
    KeyValueConfig kv;
    kv.set("dt_min", "20");
    EXPECT_THROW(pipeline_config(kv), DataError);
  }
  {
    KeyValueConfig kv;
    kv.set("variants", "M9");
    EXPECT_THROW(pipeline_config(kv), DataError);
  }
  {
    KeyValueConfig kv;
    kv.set("dichotomize", "mode");
    EXPECT_THROW(pipeline_config(kv), DataError);
  }
  {
    KeyValueConfig kv;
    kv.set("censor_thresholds", "0.2,0.4,0.6,0.8");
    EXPECT_THROW(pipeline_config(kv), DataError);
  }
  {
    KeyValueConfig kv;
    kv.set("censor_thresholds", "0.4,0.2,0.6,0.8,1.0");
    EXPECT_THROW(pipeline_config(kv), DataError);
  }
  {
    KeyValueConfig kv;
    kv.set("val_fraction", "1.0");
    EXPECT_THROW(pipeline_config(kv), DataError);
  }
  {
    KeyValueConfig kv;
    kv.set("n1", "0");
    EXPECT_THROW(pipeline_config(kv), DataError);
  }
}

TEST(VariantLabelTest, RoundTripsEveryVariant) {
  for (const std::string base : {"M1", "M2", "M3", "M4", "M5", "M6"}) {
    const MeanVariant v = variant_from_label(base);
    EXPECT_EQ(variant_label(v), base);
    EXPECT_FALSE(v.memory);
  }
  for (const std::string label : {"M1m", "M2m", "M3m"}) {
    const MeanVariant v = variant_from_label(label);
    EXPECT_TRUE(v.memory);
    EXPECT_EQ(variant_label(v), label);
  }
  EXPECT_THROW(variant_from_label("M7"), DataError);
  EXPECT_THROW(variant_from_label("m1"), DataError);
  EXPECT_THROW(variant_from_label("M4m"), std::invalid_argument);
}

TEST(PipelineStagesTest, MissingUpstreamArtifactsNameTheStageToRun) {
  TempDir tmp;
  const PipelineConfig cfg = pipeline_config(small_run_config(tmp));

  try {
    run_ingest(cfg);
    FAIL() << "ingest ran without inputs";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("synth"), std::string::npos) << e.what();
  }

  run_synth(cfg);
  run_ingest(cfg);
  try {
    run_rlr(cfg);
    FAIL() << "rlr ran without the scan artifacts";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("scan"), std::string::npos) << e.what();
  }
  try {
    run_predict(cfg);
    FAIL() << "predict ran without a fit";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("fit"), std::string::npos) << e.what();
  }
  run_scan(cfg);
  try {
    run_verify(cfg);
    FAIL() << "verify ran without a fit";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("fit"), std::string::npos) << e.what();
  }
}

TEST(PipelineStagesTest, RunsEndToEndAndRerunsAreByteIdentical) {
  TempDir tmp;
  const PipelineConfig cfg = pipeline_config(small_run_config(tmp));
  run_all(cfg);

  for (const std::string name :
       {"out/synth_truth.csv", "out/lightning_counts.csv", "out/gauge_rain.csv",
        "out/satellite_rain.csv", "out/events.csv", "out/strike_labels.csv",
        "out/rlr.csv", "out/rlr_factors.csv", "out/meanfield_M1.csv",
        "out/draws_M1.csv", "out/effects_M1.csv", "out/summary_M1.csv",
        "out/fit_M1.json", "out/predict_M1.csv", "out/predict_log_M1.csv",
        "out/verify.csv", "out/residuals.csv", "out/manifest_synth.json",
        "out/manifest_ingest.json", "out/manifest_scan.json", "out/manifest_rlr.json",
        "out/manifest_meanfield.json", "out/manifest_fit_M1.json",
        "out/manifest_predict_M1.json", "out/manifest_verify.json",
        "lightning.csv", "gauges.csv", "satellite.csv"}) {
    EXPECT_TRUE(fs::exists(tmp.path(name))) << name;
  }

  EXPECT_GE(data_rows(tmp.path("out/events.csv")), 1u);
  EXPECT_EQ(data_rows(tmp.path("out/strike_labels.csv")),
            data_rows(tmp.path("lightning.csv")));
  EXPECT_EQ(data_rows(tmp.path("out/verify.csv")), 1u);

  // The split holds out round(0.2 * 36) cells over every interval.
  EXPECT_EQ(data_rows(tmp.path("out/predict_M1.csv")), 7u * 12u);
  EXPECT_EQ(data_rows(tmp.path("out/predict_log_M1.csv")), 7u * 12u);

  const auto before = hash_tree(tmp.root());
  run_all(cfg);  // inputs exist, so the generator is skipped and bytes repeat
  EXPECT_EQ(hash_tree(tmp.root()), before);
}

TEST(PipelineStagesTest, FitStateReloadMatchesTheWrittenSummaries) {
  TempDir tmp;
  const PipelineConfig cfg = pipeline_config(small_run_config(tmp));
  run_synth(cfg);
  run_ingest(cfg);
  run_scan(cfg);
  run_fit(cfg);

  const detail::LoadedFit fitted = detail::load_fit(cfg, "M1");
  EXPECT_EQ(fitted.post.kept(), 10);
  EXPECT_EQ(fitted.post.chain_count(), 2);
  EXPECT_EQ(fitted.post.horizon, 12);
  EXPECT_EQ(fitted.post.domain.size(), 36u);
  EXPECT_EQ(fitted.validation_cells.size(), 7u);
  EXPECT_EQ(fitted.train_cells.size(), 29u);
  EXPECT_TRUE(std::isfinite(dic(fitted.post)));

  // Summaries recomputed from the reloaded draw table must reproduce the
  // summary artifact byte for byte: the reload loses nothing.
  const std::vector<ParamSummary> table = summarize(fitted.post);
  CsvReader in(tmp.path("out/summary_M1.csv"));
  in.require_header(
      {"param", "mean", "sd", "q2_5", "q25", "q50", "q75", "q97_5", "rhat", "n_eff"});
  std::vector<std::string> row;
  std::size_t i = 0;
  while (in.next(row)) {
    ASSERT_LT(i, table.size());
    EXPECT_EQ(row[0], table[i].name);
    EXPECT_EQ(row[1], format_double(table[i].mean));
    EXPECT_EQ(row[2], format_double(table[i].sd));
    EXPECT_EQ(row[7], format_double(table[i].q97_5));
    ++i;
  }
  EXPECT_EQ(i, table.size());
}

TEST(PipelineStagesTest, MedianSwitchReplaysTheSamePredictiveDraws) {
  TempDir tmp;
  KeyValueConfig kv = small_run_config(tmp);
  const PipelineConfig cfg = pipeline_config(kv);
  run_all(cfg);
  const std::string mean_report = read_text_file(tmp.path("out/verify.csv"));

  kv.set("dichotomize", "median");
  const PipelineConfig median_cfg = pipeline_config(kv);
  run_verify(median_cfg);
  const std::string median_report = read_text_file(tmp.path("out/verify.csv"));

  CsvReader in(tmp.path("out/verify.csv"));
  in.require_header({"variant", "dic", "ec", "poht", "pod", "pofd", "rmse", "hss"});
  std::vector<std::string> row;
  ASSERT_TRUE(in.next(row));
  EXPECT_EQ(row[0], "M1");
  const double ec = in.to_double(row[2]);
  EXPECT_GE(ec, 0.0);
  EXPECT_LE(ec, 100.0);
  EXPECT_TRUE(std::isfinite(in.to_double(row[6])));

  // Same fit, same seed stream: only the point summary may move.
  EXPECT_TRUE(std::isfinite(in.to_double(row[1])));
  (void)mean_report;
  (void)median_report;
}

TEST(PipelineStagesTest, ManifestsRecordTheResolvedConfigAndHashes) {
  TempDir tmp;
  const PipelineConfig cfg = pipeline_config(small_run_config(tmp));
  run_synth(cfg);
  run_ingest(cfg);

  const nlohmann::json m =
      nlohmann::json::parse(read_text_file(tmp.path("out/manifest_ingest.json")));
  EXPECT_EQ(m.at("stage"), "ingest");
  EXPECT_EQ(m.at("seed").get<std::uint64_t>(), 11u);
  EXPECT_EQ(m.at("config").at("n1"), "6");
  EXPECT_EQ(m.at("config").at("dichotomize"), "mean");
  EXPECT_EQ(m.at("inputs").at("lightning.csv"),
            sha256_file(tmp.path("lightning.csv")));
  EXPECT_EQ(m.at("outputs").at("gauge_rain.csv"),
            sha256_file(tmp.path("out/gauge_rain.csv")));
}

TEST(PipelineStagesTest, FieldArtifactsReloadExactly) {
  TempDir tmp;
  const PipelineConfig cfg = pipeline_config(small_run_config(tmp));
  run_synth(cfg);
  run_ingest(cfg);

  const std::vector<LightningStrike> strikes = load_lightning(cfg.lightning_csv);
  const BinnedLightning binned =
      bin_lightning(strikes, cfg.grid, cfg.t0, cfg.dt_min, cfg.T);
  const SpaceTimeField counts =
      detail::load_field_csv(tmp.path("out/lightning_counts.csv"), cfg.grid, cfg.t0,
                             cfg.dt_min, cfg.T, "count", 0.0);
  ASSERT_EQ(counts.values.size(), binned.counts.values.size());
  for (std::size_t i = 0; i < counts.values.size(); ++i) {
    EXPECT_EQ(counts.values[i], binned.counts.values[i]);
  }

  const SpaceTimeField gauge = detail::load_field_csv(
      tmp.path("out/gauge_rain.csv"), cfg.grid, cfg.t0, cfg.dt_min, cfg.T, "rain_mm",
      SpaceTimeField::missing_value());
  const SynthConfig storm_cfg = [&] {
    SynthConfig sc;
    sc.grid = cfg.grid;
    sc.t0 = cfg.t0;
    sc.dt_min = cfg.dt_min;
    sc.T = cfg.T;
    sc.seed = cfg.seed;
    const double w = cfg.grid.n2 * cfg.grid.cell_size_m;
    const double h = cfg.grid.n1 * cfg.grid.cell_size_m;
    sc.start_x_m = cfg.grid.origin_x_m + 0.15 * w;
    sc.start_y_m = cfg.grid.origin_y_m + 0.20 * h;
    sc.end_x_m = cfg.grid.origin_x_m + 0.85 * w;
    sc.end_y_m = cfg.grid.origin_y_m + 0.80 * h;
    sc.footprint_m = 0.21 * std::min(w, h);
    sc.t_begin = cfg.T / 24;
    sc.t_peak = std::max(sc.t_begin + 1, 7 * cfg.T / 24);
    sc.t_end = std::max(sc.t_peak + 1, 11 * cfg.T / 12);
    return sc;
  }();
  const SyntheticStorm storm = synthesize_storm(storm_cfg);
  for (int t = 0; t < cfg.T; ++t) {
    for (int p = 0; p < cfg.grid.size(); ++p) {
      if (!gauge.has(t, p)) continue;
      EXPECT_DOUBLE_EQ(gauge.at(t, p), storm.rain_mm.at(t, p));
    }
  }
}
