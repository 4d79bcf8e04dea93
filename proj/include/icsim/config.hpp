#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "icsim/engine.hpp"
#include "icsim/mlp.hpp"

namespace icsim {

/// Invalid configuration. `line` is 1-based, 0 when no position applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

struct AssocSettings {
  std::string model_path;
  double temperature = 1.0;
  std::array<int, 2> hidden{120, 60};
  std::string dataset_path = "dataset.jsonl";
  int dataset_samples = 5000;
  int min_live_users = 1;
  int max_live_users = 4;
  TrainOptions train;
};

struct SimulationSettings {
  std::vector<std::uint64_t> seeds{1};
  int n_drops = 10;
  int n_tti = 2000;
  int threads = 0;
  std::vector<std::string> scenarios;  // empty: the default catalogue
  std::string out_dir = "results";
};

struct AppConfig {
  SimParams sim;
  AssocSettings assoc;
  SimulationSettings simulation;

  /// Every effective setting as sorted-key JSON text.
  std::string canonical_json() const;
  /// SHA-256 hex digest of canonical_json().
  std::string hash() const;
  /// Scenarios to run, with simulation seeds / drops / TTIs applied.
  std::vector<ScenarioConfig> selected_scenarios(const std::vector<std::string>& override_labels = {}) const;
};

/// Parses YAML text. Unknown keys and bad values raise ConfigError with the line.
AppConfig parse_config(const std::string& text);
AppConfig load_config(const std::string& path);

std::string sha256_hex(const std::string& data);

}  // namespace icsim
