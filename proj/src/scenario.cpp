#include "icsim/scenario.hpp"

#include <stdexcept>

namespace icsim {

std::string to_string(IcicMode mode) {
  switch (mode) {
    case IcicMode::None: return "NONE";
    case IcicMode::Icic: return "ICIC";
    case IcicMode::Eicic: return "EICIC";
    case IcicMode::Feicic: return "FEICIC";
  }
  return "?";
}

std::optional<IcicMode> parse_icic_mode(const std::string& text) {
  for (IcicMode m : {IcicMode::None, IcicMode::Icic, IcicMode::Eicic, IcicMode::Feicic}) {
    if (to_string(m) == text) {
      return m;
    }
  }
  return std::nullopt;
}

void ScenarioConfig::validate(bool have_model) const {
  if (label.empty()) {
    throw std::invalid_argument("scenario label must not be empty");
  }
  if (n_tti < 0 || n_drops < 0) {
    throw std::invalid_argument("scenario " + label + ": n_tti and n_drops must be non-negative");
  }
  if (seeds.empty()) {
    throw std::invalid_argument("scenario " + label + ": at least one seed is required");
  }
  if (dl_assoc && !have_model) {
    throw std::invalid_argument("scenario " + label + ": neural association needs a trained model path");
  }
  if (cre && !rac_sharing) {
    throw std::invalid_argument("scenario " + label + ": range extension requires RAC sharing");
  }
}

ScenarioConfig situation1() {
  ScenarioConfig s;
  s.label = "no_sharing";
  return s;
}

ScenarioConfig situation2() {
  ScenarioConfig s;
  s.label = "sharing";
  s.rac_sharing = true;
  return s;
}

ScenarioConfig situation3() {
  ScenarioConfig s;
  s.label = "sharing_feicic_eicic_comp";
  s.rac_sharing = true;
  s.icic_mode = IcicMode::Feicic;
  s.comp = true;
  s.cre = true;
  return s;
}

ScenarioConfig situation4() {
  ScenarioConfig s = situation3();
  s.label = "sharing_dl_feicic_eicic_comp";
  s.dl_assoc = true;
  return s;
}

std::vector<ScenarioConfig> scenario_catalog() {
  ScenarioConfig no_sharing_comp = situation1();
  no_sharing_comp.label = "no_sharing_comp";
  no_sharing_comp.comp = true;

  ScenarioConfig sharing_comp = situation2();
  sharing_comp.label = "sharing_comp";
  sharing_comp.comp = true;

  ScenarioConfig sharing_comp_icic = sharing_comp;
  sharing_comp_icic.label = "sharing_comp_icic";
  sharing_comp_icic.icic_mode = IcicMode::Icic;

  ScenarioConfig sharing_comp_eicic = sharing_comp;
  sharing_comp_eicic.label = "sharing_comp_eicic";
  sharing_comp_eicic.icic_mode = IcicMode::Eicic;
  sharing_comp_eicic.cre = true;

  return {situation2(),       situation1(),         no_sharing_comp, sharing_comp, sharing_comp_icic,
          sharing_comp_eicic, situation3(),         situation4()};
}

std::optional<ScenarioConfig> find_scenario(const std::string& label) {
  for (const ScenarioConfig& s : scenario_catalog()) {
    if (s.label == label) {
      return s;
    }
  }
  return std::nullopt;
}

}  // namespace icsim
