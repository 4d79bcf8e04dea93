#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace icsim {

enum class IcicMode { None, Icic, Eicic, Feicic };

std::string to_string(IcicMode mode);
std::optional<IcicMode> parse_icic_mode(const std::string& text);

struct ScenarioConfig {
  std::string label;
  bool rac_sharing = false;
  IcicMode icic_mode = IcicMode::None;
  bool comp = false;
  bool cre = false;  // range-extension bias towards LRN/UAV cells
  bool dl_assoc = false;
  std::vector<std::uint64_t> seeds{1};
  int n_tti = 2000;
  int n_drops = 10;

  bool abs_active() const { return icic_mode == IcicMode::Eicic || icic_mode == IcicMode::Feicic; }
  /// Throws std::invalid_argument on an inconsistent combination.
  void validate(bool have_model) const;
};

/// Baseline: no RAC sharing, no coordination.
ScenarioConfig situation1();
/// RAC sharing with plain max-RSRP attachment.
ScenarioConfig situation2();
/// Sharing with range extension, reduced-power ABS and CS-CoMP.
ScenarioConfig situation3();
/// situation3() with neural association.
ScenarioConfig situation4();

/// The eight labelled scenario configurations.
std::vector<ScenarioConfig> scenario_catalog();
std::optional<ScenarioConfig> find_scenario(const std::string& label);

}  // namespace icsim
