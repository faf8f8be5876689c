#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "stormrain/pipeline.hpp"

using namespace stormrain;

namespace {

// Flags recorded in the order given so later flags win, and applied on top of
// the settings file: the file sets the baseline, the command line overrides.
struct CliState {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::optional<std::string> variant;
  bool memory = false;
  std::vector<std::string> raw_sets;
};

void add_shared_options(CLI::App* cmd, CliState& st) {
  cmd->add_option("--config", st.config_path,
                  "plain-text settings file (key = value lines)");
  const auto keyed = [&st](const char* key) {
    return [&st, key](const std::string& v) { st.overrides.emplace_back(key, v); };
  };
  cmd->add_option_function<std::string>("--lightning", keyed("lightning_csv"),
                                        "lightning strike archive CSV");
  cmd->add_option_function<std::string>("--gauges", keyed("gauges_csv"),
                                        "rain gauge readings CSV");
  cmd->add_option_function<std::string>("--satellite", keyed("satellite_csv"),
                                        "satellite cell-hour rainfall CSV");
  cmd->add_option_function<std::string>("--out", keyed("out_dir"),
                                        "artifact output directory");
  cmd->add_option_function<std::string>("--seed", keyed("seed"), "root RNG seed");
  cmd->add_option_function<std::string>("--dt", keyed("dt_min"),
                                        "interval length in minutes (15 or 30)");
  cmd->add_option_function<std::string>("--chains", keyed("chains"), "MCMC chains");
  cmd->add_option_function<std::string>("--iters", keyed("iters"),
                                        "MCMC iterations per chain");
  cmd->add_option_function<std::string>("--burnin", keyed("burnin"),
                                        "iterations discarded per chain");
  cmd->add_option_function<std::string>("--thin", keyed("thin"), "thinning stride");
  cmd->add_option("--variant", st.variant,
                  "mean-structure variant (M1..M6); repeat runs use the variants key");
  cmd->add_flag("--memory", st.memory,
                "use running 30-minute spatial weights (M1-M3 only)");
  cmd->add_option("--set", st.raw_sets,
                  "extra setting as key=value (any settings-file key)")
      ->take_all();
}

PipelineConfig resolve_config(const CliState& st) {
  KeyValueConfig kv;
  if (!st.config_path.empty()) kv = KeyValueConfig::from_file(st.config_path);
  for (const std::string& item : st.raw_sets) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw DataError("--set expects key=value, got '" + item + "'");
    }
    kv.set(item.substr(0, eq), item.substr(eq + 1));
  }
  for (const auto& [key, value] : st.overrides) kv.set(key, value);
  if (st.variant || st.memory) {
    kv.set("variants", st.variant.value_or("M1") + (st.memory ? "m" : ""));
  }
  return pipeline_config(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"storm rainfall reconstruction from lightning archives"};
  app.require_subcommand(1);

  CliState st;
  std::function<void(const PipelineConfig&)> stage;
  const std::vector<std::pair<const char*, std::pair<const char*,
                                                     void (*)(const PipelineConfig&)>>>
      stages = {
          {"synth", {"generate a self-consistent synthetic storm dataset", run_synth}},
          {"ingest", {"bin lightning and align gauge/satellite rainfall", run_ingest}},
          {"scan", {"detect convective events in the strike archive", run_scan}},
          {"rlr", {"estimate rainfall-lightning ratios by event class", run_rlr}},
          {"meanfield", {"evaluate the lightning-driven mean surface", run_meanfield}},
          {"fit", {"sample the hierarchical model posterior", run_fit}},
          {"predict", {"posterior predictive rainfall at held-out cells", run_predict}},
          {"verify", {"score predictions against held-out gauges", run_verify}},
          {"all", {"run every stage in order", run_all}},
      };
  for (const auto& [name, info] : stages) {
    CLI::App* cmd = app.add_subcommand(name, info.first);
    add_shared_options(cmd, st);
    void (*fn)(const PipelineConfig&) = info.second;
    cmd->callback([&stage, fn] { stage = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    stage(resolve_config(st));
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected failure: %s\n", e.what());
    return 3;
  }
  return 0;
}
