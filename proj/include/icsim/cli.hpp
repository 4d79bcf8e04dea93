#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace icsim {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kOutDirEnv = "ICSIM_OUT_DIR";

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitInvalid = 2;

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> output_paths;
  std::string started;
  std::string finished;

  std::string to_json() const;
};

struct SimulateOptions {
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;      // empty: environment, then config
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> scenarios;
  bool dump_layout = false;
};

struct GenDatasetOptions {
  std::string config_path;
  int n_samples = -1;     // negative: config value
  std::string out_path;   // empty: config value
};

struct TrainOptionsCli {
  std::string config_path;
  std::string dataset_path;
  std::string model_path;
  int epochs = -1;  // negative: config value
};

struct DumpLayoutOptions {
  std::string config_path;
  std::string out_path;  // empty: stdout
  std::int64_t seed = -1;
};

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);
int cmd_gen_dataset(const GenDatasetOptions& options, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptionsCli& options, std::ostream& out, std::ostream& err);
int cmd_dump_layout(const DumpLayoutOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv (subcommand plus flags) and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace icsim
