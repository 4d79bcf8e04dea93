#include "icsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "icsim/config.hpp"
#include "icsim/engine.hpp"
#include "icsim/features.hpp"
#include "icsim/rng.hpp"

namespace icsim {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

AppConfig config_from(const std::string& path) { return path.empty() ? AppConfig{} : load_config(path); }

void write_cdf_csv(const fs::path& path, const std::vector<CdfPoint>& cdf) {
  std::ofstream f(path);
  if (!f) {
    throw std::runtime_error("cannot write " + path.string());
  }
  f << "value,cdf\n";
  for (const CdfPoint& p : cdf) {
    f << fmt(p.value) << ',' << fmt(p.cdf) << '\n';
  }
}

nlohmann::json stats(const std::vector<double>& v) {
  if (v.empty()) {
    return {{"count", 0}};
  }
  double sum = 0.0;
  for (double x : v) {
    sum += x;
  }
  return {{"count", v.size()},
          {"mean", sum / static_cast<double>(v.size())},
          {"p5", quantile(v, 0.05)},
          {"p50", quantile(v, 0.50)},
          {"p95", quantile(v, 0.95)}};
}

nlohmann::json report_summary(const MetricsReport& r) {
  nlohmann::json j;
  j["label"] = r.scenario_label;
  j["drops"] = r.drops;
  j["throughput_bps"] = stats(r.throughput_samples);
  j["sinr_db"] = stats(r.sinr_samples);
  j["interference_dbm"] = stats(r.interference_samples);
  if (!r.sinr_samples.empty()) {
    std::vector<double> thresholds;
    for (int th = -10; th <= 20; ++th) {
      thresholds.push_back(th);
    }
    nlohmann::json table = nlohmann::json::array();
    for (const auto& [th, p] : outage_curve(r.sinr_samples, thresholds)) {
      table.push_back({{"threshold_db", th}, {"outage", p}});
    }
    j["outage"] = table;
  }
  j["audit"] = {{"muted_checks", r.audit.muted_checks},
                {"muted_violations", r.audit.muted_violations},
                {"lrn_backlog_events", r.audit.lrn_backlog_events},
                {"lrn_priority_violations", r.audit.lrn_priority_violations},
                {"overbooked_prbs", r.audit.overbooked_prbs},
                {"arrived_bits", r.audit.arrived_bits},
                {"served_bits", r.audit.served_bits}};
  return j;
}

}  // namespace

std::string RunManifest::to_json() const {
  nlohmann::json j{{"config_hash", config_hash}, {"tool_version", tool_version}, {"seeds", seeds},
                   {"output_paths", output_paths}, {"started", started},          {"finished", finished}};
  return j.dump(2);
}

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
  AppConfig config;
  std::vector<ScenarioConfig> scenarios;
  std::optional<MLPModel> model;
  fs::path out_dir;
  const std::string started = utc_now();
  try {
    config = config_from(options.config_path);
    if (!options.seeds.empty()) {
      config.simulation.seeds = options.seeds;
    }
    scenarios = config.selected_scenarios(options.scenarios);
    const bool need_model = std::any_of(scenarios.begin(), scenarios.end(), [](const auto& s) { return s.dl_assoc; });
    if (need_model) {
      model = load_model(config.assoc.model_path);
    }
    const char* env = std::getenv(kOutDirEnv);
    out_dir = !options.out_dir.empty() ? fs::path(options.out_dir)
              : (env != nullptr && *env != '\0') ? fs::path(env)
                                                  : fs::path(config.simulation.out_dir);
    config.sim.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    fs::create_directories(out_dir);
    const std::vector<MetricsReport> reports =
        run_scenarios(config.sim, scenarios, model ? &*model : nullptr, config.simulation.threads);

    RunManifest manifest;
    manifest.config_hash = config.hash();
    manifest.seeds = config.simulation.seeds;
    manifest.started = started;
    nlohmann::json summary;
    summary["config_hash"] = manifest.config_hash;
    summary["scenarios"] = nlohmann::json::array();
    for (const MetricsReport& r : reports) {
      const std::vector<std::pair<std::string, std::vector<CdfPoint>>> series{
          {"throughput", r.throughput_cdf()}, {"sinr", r.sinr_cdf()}, {"interference", r.interference_cdf()}};
      for (const auto& [metric, cdf] : series) {
        const fs::path p = out_dir / (r.scenario_label + "_" + metric + ".csv");
        write_cdf_csv(p, cdf);
        manifest.output_paths.push_back(p.string());
      }
      summary["scenarios"].push_back(report_summary(r));
    }
    const fs::path summary_path = out_dir / "summary.json";
    std::ofstream(summary_path) << summary.dump(2) << '\n';
    manifest.output_paths.push_back(summary_path.string());

    if (options.dump_layout) {
      const Drop drop = make_drop(config.sim, drop_seed(config.simulation.seeds.front(), 0), 1);
      const fs::path p = out_dir / "layout.json";
      std::ofstream(p) << layout_to_json(drop.layout) << '\n';
      manifest.output_paths.push_back(p.string());
    }

    const fs::path manifest_path = out_dir / "manifest.json";
    manifest.output_paths.push_back(manifest_path.string());
    manifest.finished = utc_now();
    std::ofstream(manifest_path) << manifest.to_json() << '\n';

    for (const MetricsReport& r : reports) {
      if (r.throughput_samples.empty()) {
        out << r.scenario_label << ": no samples\n";
        continue;
      }
      out << r.scenario_label << ": median throughput " << fmt(quantile(r.throughput_samples, 0.5) / 1e6)
          << " Mb/s, median SINR " << fmt(quantile(r.sinr_samples, 0.5)) << " dB\n";
    }
    out << "wrote " << manifest.output_paths.size() << " files to " << out_dir.string() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_gen_dataset(const GenDatasetOptions& options, std::ostream& out, std::ostream& err) {
  AppConfig config;
  int n = 0;
  std::string path;
  try {
    config = config_from(options.config_path);
    config.sim.validate();
    n = options.n_samples >= 0 ? options.n_samples : config.assoc.dataset_samples;
    path = options.out_path.empty() ? config.assoc.dataset_path : options.out_path;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  try {
    const std::vector<TrainingSample> samples =
        sample_training_set(config.sim, situation3(), n, config.simulation.seeds.front(),
                            config.assoc.min_live_users, config.assoc.max_live_users);
    write_dataset(path, config.sim.tile, samples);
    const auto feasible = std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.feasible; });
    out << "wrote " << samples.size() << " samples (" << feasible << " feasible) to " << path << '\n';
  } catch (const OracleSizeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_train(const TrainOptionsCli& options, std::ostream& out, std::ostream& err) {
  AppConfig config;
  std::vector<TrainingSample> samples;
  DatasetHeader header;
  try {
    config = config_from(options.config_path);
    samples = read_dataset(options.dataset_path.empty() ? config.assoc.dataset_path : options.dataset_path, &header);
    if (samples.empty()) {
      throw DatasetSchemaError("dataset has no samples");
    }
    if (options.model_path.empty() && config.assoc.model_path.empty()) {
      throw ConfigError("no output model path given");
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  try {
    const std::string model_path = options.model_path.empty() ? config.assoc.model_path : options.model_path;
    TrainOptions topt = config.assoc.train;
    if (options.epochs >= 0) {
      topt.epochs = options.epochs;
    }
    std::vector<Example> examples;
    examples.reserve(samples.size());
    for (const TrainingSample& s : samples) {
      examples.push_back(s.example());
    }
    const MLPModel init = MLPModel::create(header.feature_dim, header.shape.users, header.shape.sectors,
                                           config.assoc.hidden, topt.seed, config.assoc.temperature);
    const TrainResult result = train(init, examples, topt);
    save_model(result.model, model_path);
    const std::string trace_path = model_path + ".loss.csv";
    std::ofstream trace(trace_path);
    trace << "epoch,loss,raw_loss\n";
    for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
      trace << e + 1 << ',' << fmt(result.loss_trace[e]) << ',' << fmt(result.raw_loss[e]) << '\n';
    }
    out << "trained on " << samples.size() << " samples for " << topt.epochs << " epochs; final loss "
        << (result.loss_trace.empty() ? fmt(loss(result.model, examples)) : fmt(result.loss_trace.back()))
        << "; model written to " << model_path << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_dump_layout(const DumpLayoutOptions& options, std::ostream& out, std::ostream& err) {
  AppConfig config;
  try {
    config = config_from(options.config_path);
    config.sim.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  try {
    const std::uint64_t seed =
        options.seed >= 0 ? static_cast<std::uint64_t>(options.seed) : config.simulation.seeds.front();
    const NetworkLayout layout =
        build_default_layout(derive_seed(drop_seed(seed, 0), {1}), config.sim.n_psn_users, config.sim.layout);
    if (options.out_path.empty()) {
      out << layout_to_json(layout) << '\n';
    } else {
      std::ofstream f(options.out_path);
      if (!f) {
        throw std::runtime_error("cannot write " + options.out_path);
      }
      f << layout_to_json(layout) << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coexistence downlink interference simulator", "icsim"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  SimulateOptions sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run the scenario matrix and write CDFs");
  simulate->add_option("--config", sim.config_path, "YAML configuration file");
  simulate->add_option("--out-dir", sim.out_dir, "Output directory (overrides ICSIM_OUT_DIR and config)");
  simulate->add_option("--seeds", sim.seeds, "Base seeds")->delimiter(',');
  simulate->add_option("--scenario", sim.scenarios, "Scenario label (repeatable)");
  simulate->add_flag("--dump-layout", sim.dump_layout, "Also write layout.json");

  GenDatasetOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-dataset", "Write oracle-labelled association samples");
  gen_cmd->add_option("--config", gen.config_path, "YAML configuration file");
  gen_cmd->add_option("--samples,-n", gen.n_samples, "Number of samples");
  gen_cmd->add_option("--out", gen.out_path, "Dataset path (JSON lines)");

  TrainOptionsCli tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit the association network to a dataset");
  train_cmd->add_option("--config", tr.config_path, "YAML configuration file");
  train_cmd->add_option("--dataset", tr.dataset_path, "Dataset path");
  train_cmd->add_option("--model", tr.model_path, "Output model path");
  train_cmd->add_option("--epochs", tr.epochs, "Training epochs");

  DumpLayoutOptions dump;
  CLI::App* dump_cmd = app.add_subcommand("dump-layout", "Print the deployment geometry as JSON");
  dump_cmd->add_option("--config", dump.config_path, "YAML configuration file");
  dump_cmd->add_option("--out", dump.out_path, "Output file (default stdout)");
  dump_cmd->add_option("--seed", dump.seed, "Drop seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  if (simulate->parsed()) {
    return cmd_simulate(sim, out, err);
  }
  if (gen_cmd->parsed()) {
    return cmd_gen_dataset(gen, out, err);
  }
  if (train_cmd->parsed()) {
    return cmd_train(tr, out, err);
  }
  return cmd_dump_layout(dump, out, err);
}

}  // namespace icsim
