#include "icsim/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <json.hpp>

namespace icsim {

ConfigError::ConfigError(const std::string& message, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

namespace {

using Setter = std::function<void(const YAML::Node&)>;
using Table = std::map<std::string, Setter>;

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <typename T>
T as(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) {
    throw ConfigError("'" + key + "' must be a scalar value", line_of(n));
  }
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + key + "' has an invalid value '" + n.Scalar() + "'", line_of(n));
  }
}

template <typename T>
Setter set(T& field, const std::string& key) {
  return [&field, key](const YAML::Node& n) { field = as<T>(n, key); };
}

template <typename T>
Setter set_list(std::vector<T>& field, const std::string& key) {
  return [&field, key](const YAML::Node& n) {
    if (!n.IsSequence()) {
      throw ConfigError("'" + key + "' must be a list", line_of(n));
    }
    field.clear();
    for (const YAML::Node& item : n) {
      field.push_back(as<T>(item, key));
    }
  };
}

void apply(const YAML::Node& section, const std::string& name, const Table& table) {
  if (section.IsNull()) {
    return;
  }
  if (!section.IsMap()) {
    throw ConfigError("section '" + name + "' must be a mapping", line_of(section));
  }
  for (const auto& kv : section) {
    const std::string key = kv.first.as<std::string>();
    const auto it = table.find(key);
    if (it == table.end()) {
      throw ConfigError("unknown key '" + key + "' in section '" + name + "'", line_of(kv.first));
    }
    it->second(kv.second);
  }
}

template <typename F>
void checked(const YAML::Node& anchor, F&& validate) {
  try {
    validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), line_of(anchor));
  }
}

Setter antenna(AntennaPattern& p, const std::string& name) {
  return [&p, name](const YAML::Node& n) {
    apply(n, name,
          {{"peak_gain_dbi", set(p.peak_gain_dbi, "peak_gain_dbi")},
           {"h_beamwidth_deg", set(p.h_beamwidth_deg, "h_beamwidth_deg")},
           {"v_beamwidth_deg", set(p.v_beamwidth_deg, "v_beamwidth_deg")},
           {"max_attenuation_db", set(p.max_attenuation_db, "max_attenuation_db")},
           {"downtilt_deg", set(p.downtilt_deg, "downtilt_deg")}});
  };
}

nlohmann::json antenna_json(const AntennaPattern& p) {
  return {{"peak_gain_dbi", p.peak_gain_dbi},
          {"h_beamwidth_deg", p.h_beamwidth_deg},
          {"v_beamwidth_deg", p.v_beamwidth_deg},
          {"max_attenuation_db", p.max_attenuation_db},
          {"downtilt_deg", p.downtilt_deg}};
}

void validate_scenarios(const std::vector<std::string>& labels, const YAML::Node& anchor) {
  for (const std::string& l : labels) {
    if (!find_scenario(l)) {
      throw ConfigError("unknown scenario label '" + l + "'", line_of(anchor));
    }
  }
}

}  // namespace

AppConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  AppConfig c;
  if (root.IsNull()) {
    return c;
  }
  if (!root.IsMap()) {
    throw ConfigError("top level must be a mapping of sections", line_of(root));
  }

  LayoutConfig& L = c.sim.layout;
  ChannelParams& C = c.sim.channel;
  TrafficConfig& T = c.sim.traffic;
  SchedulerConfig& S = c.sim.scheduler;
  AssocSettings& A = c.assoc;
  SimulationSettings& R = c.simulation;

  const Table layout{{"psn_isd_m", set(L.psn_isd_m, "psn_isd_m")},
                     {"lrn_isd_m", set(L.lrn_isd_m, "lrn_isd_m")},
                     {"region_radius_m", set(L.region_radius_m, "region_radius_m")},
                     {"psn_sectors_per_site", set(L.psn_sectors_per_site, "psn_sectors_per_site")},
                     {"n_lrn_sites", set(L.n_lrn_sites, "n_lrn_sites")},
                     {"lrn_sectors_per_site", set(L.lrn_sectors_per_site, "lrn_sectors_per_site")},
                     {"n_uavs", set(L.n_uavs, "n_uavs")},
                     {"track_offset_m", set(L.track_offset_m, "track_offset_m")},
                     {"lrn_side_offset_m", set(L.lrn_side_offset_m, "lrn_side_offset_m")},
                     {"psn_tx_power_dbm", set(L.psn_tx_power_dbm, "psn_tx_power_dbm")},
                     {"lrn_tx_power_dbm", set(L.lrn_tx_power_dbm, "lrn_tx_power_dbm")},
                     {"uav_tx_power_dbm", set(L.uav_tx_power_dbm, "uav_tx_power_dbm")},
                     {"psn_height_m", set(L.psn_height_m, "psn_height_m")},
                     {"lrn_height_m", set(L.lrn_height_m, "lrn_height_m")},
                     {"uav_height_m", set(L.uav_height_m, "uav_height_m")},
                     {"ue_height_m", set(L.ue_height_m, "ue_height_m")},
                     {"train_speed_mps", set(L.train_speed_mps, "train_speed_mps")},
                     {"n_psn_users", set(c.sim.n_psn_users, "n_psn_users")}};
  const Table channel{{"carrier_mhz", set(C.carrier_mhz, "carrier_mhz")},
                      {"bandwidth_mhz", set(C.bandwidth_mhz, "bandwidth_mhz")},
                      {"n_prb", set(C.n_prb, "n_prb")},
                      {"prb_bandwidth_hz", set(C.prb_bandwidth_hz, "prb_bandwidth_hz")},
                      {"noise_figure_db", set(C.noise_figure_db, "noise_figure_db")},
                      {"thermal_noise_dbm_hz", set(C.thermal_noise_dbm_hz, "thermal_noise_dbm_hz")},
                      {"shadowing_sigma_db", set(C.shadowing_sigma_db, "shadowing_sigma_db")},
                      {"shadowing_correlation", set(C.shadowing_correlation, "shadowing_correlation")},
                      {"min_distance_m", set(C.min_distance_m, "min_distance_m")},
                      {"psn_antenna", antenna(C.psn_antenna, "psn_antenna")},
                      {"lrn_antenna", antenna(C.lrn_antenna, "lrn_antenna")},
                      {"uav_antenna", antenna(C.uav_antenna, "uav_antenna")}};
  const Table traffic{{"voip_fraction", set(T.voip_fraction, "voip_fraction")},
                      {"voip_packet_bytes", set(T.voip_packet_bytes, "voip_packet_bytes")},
                      {"voip_period_ms", set(T.voip_period_ms, "voip_period_ms")},
                      {"video_rate_kbps", set(T.video_rate_kbps, "video_rate_kbps")}};
  const Table scheduler{{"abs_subframes", set(S.abs_subframes, "abs_subframes")},
                        {"feicic_power_scale", set(S.feicic_power_scale, "feicic_power_scale")},
                        {"cre_bias_db", set(S.cre_bias_db, "cre_bias_db")},
                        {"edge_margin_db", set(S.edge_margin_db, "edge_margin_db")},
                        {"ewma_horizon_tti", set(S.ewma_horizon_tti, "ewma_horizon_tti")},
                        {"avg_rate_init_bps", set(S.avg_rate_init_bps, "avg_rate_init_bps")},
                        {"comp_cluster_size", set(S.comp_cluster_size, "comp_cluster_size")},
                        {"icic_power_scale", set(S.icic_power_scale, "icic_power_scale")},
                        {"icic_edge_margin_db", set(S.icic_edge_margin_db, "icic_edge_margin_db")}};
  const Table train{{"epochs", set(A.train.epochs, "epochs")},
                    {"step", set(A.train.step, "step")},
                    {"batch_size", set(A.train.batch_size, "batch_size")},
                    {"seed", set(A.train.seed, "seed")}};
  const Table assoc{{"model_path", set(A.model_path, "model_path")},
                    {"temperature", set(A.temperature, "temperature")},
                    {"hidden", [&](const YAML::Node& n) {
                       std::vector<int> h;
                       set_list(h, "hidden")(n);
                       if (h.size() != 2) {
                         throw ConfigError("'hidden' lists the two tail layer widths, e.g. [120, 60]", line_of(n));
                       }
                       A.hidden = {h[0], h[1]};
                     }},
                    {"tile_users", set(c.sim.tile.users, "tile_users")},
                    {"tile_sectors", set(c.sim.tile.sectors, "tile_sectors")},
                    {"psi_max_offset_db", set(c.sim.psi_max_offset_db, "psi_max_offset_db")},
                    {"dataset_path", set(A.dataset_path, "dataset_path")},
                    {"dataset_samples", set(A.dataset_samples, "dataset_samples")},
                    {"min_live_users", set(A.min_live_users, "min_live_users")},
                    {"max_live_users", set(A.max_live_users, "max_live_users")},
                    {"train", [&](const YAML::Node& n) { apply(n, "assoc.train", train); }}};
  const Table simulation{{"seeds", set_list(R.seeds, "seeds")},
                         {"n_drops", set(R.n_drops, "n_drops")},
                         {"n_tti", set(R.n_tti, "n_tti")},
                         {"threads", set(R.threads, "threads")},
                         {"scenarios", set_list(R.scenarios, "scenarios")},
                         {"out_dir", set(R.out_dir, "out_dir")}};

  const std::map<std::string, const Table*> sections{{"layout", &layout},       {"channel", &channel},
                                                     {"traffic", &traffic},     {"scheduler", &scheduler},
                                                     {"assoc", &assoc},         {"simulation", &simulation}};
  for (const auto& kv : root) {
    const std::string name = kv.first.as<std::string>();
    const auto it = sections.find(name);
    if (it == sections.end()) {
      throw ConfigError("unknown section '" + name + "'", line_of(kv.first));
    }
    apply(kv.second, name, *it->second);
    const YAML::Node& anchor = kv.first;
    if (name == "layout") {
      checked(anchor, [&] {
        L.validate();
        if (c.sim.n_psn_users < 1) {
          throw std::invalid_argument("n_psn_users must be >= 1");
        }
      });
    } else if (name == "channel") {
      checked(anchor, [&] { C.validate(); });
    } else if (name == "traffic") {
      checked(anchor, [&] { T.validate(); });
    } else if (name == "scheduler") {
      checked(anchor, [&] { S.validate(); });
    } else if (name == "assoc") {
      checked(anchor, [&] {
        if (!(A.temperature > 0.0)) {
          throw std::invalid_argument("temperature must be positive");
        }
        if (A.hidden[0] < 1 || A.hidden[1] < 1) {
          throw std::invalid_argument("hidden widths must be positive");
        }
        if (c.sim.tile.users < 1 || c.sim.tile.sectors < 1) {
          throw std::invalid_argument("tile_users and tile_sectors must be positive");
        }
        if (A.dataset_samples < 0 || A.train.epochs < 0 || A.train.batch_size < 1 || A.train.step < 0.0) {
          throw std::invalid_argument("dataset_samples, epochs must be >= 0, batch_size >= 1, step >= 0");
        }
        if (A.min_live_users < 1 || A.max_live_users < A.min_live_users || A.max_live_users > c.sim.tile.users) {
          throw std::invalid_argument("live users must satisfy 1 <= min_live_users <= max_live_users <= tile_users");
        }
      });
    } else if (name == "simulation") {
      checked(anchor, [&] {
        if (R.seeds.empty() || R.n_drops < 0 || R.n_tti < 0 || R.threads < 0) {
          throw std::invalid_argument("need at least one seed and non-negative n_drops, n_tti, threads");
        }
      });
      validate_scenarios(R.scenarios, anchor);
    }
  }
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string AppConfig::canonical_json() const {
  const LayoutConfig& L = sim.layout;
  const ChannelParams& C = sim.channel;
  const TrafficConfig& T = sim.traffic;
  const SchedulerConfig& S = sim.scheduler;
  nlohmann::json j;
  j["layout"] = {{"psn_isd_m", L.psn_isd_m},
                 {"lrn_isd_m", L.lrn_isd_m},
                 {"region_radius_m", L.region_radius_m},
                 {"psn_sectors_per_site", L.psn_sectors_per_site},
                 {"n_lrn_sites", L.n_lrn_sites},
                 {"lrn_sectors_per_site", L.lrn_sectors_per_site},
                 {"n_uavs", L.n_uavs},
                 {"track_offset_m", L.track_offset_m},
                 {"lrn_side_offset_m", L.lrn_side_offset_m},
                 {"psn_tx_power_dbm", L.psn_tx_power_dbm},
                 {"lrn_tx_power_dbm", L.lrn_tx_power_dbm},
                 {"uav_tx_power_dbm", L.uav_tx_power_dbm},
                 {"psn_height_m", L.psn_height_m},
                 {"lrn_height_m", L.lrn_height_m},
                 {"uav_height_m", L.uav_height_m},
                 {"ue_height_m", L.ue_height_m},
                 {"train_speed_mps", L.train_speed_mps},
                 {"n_psn_users", sim.n_psn_users}};
  j["channel"] = {{"carrier_mhz", C.carrier_mhz},
                  {"bandwidth_mhz", C.bandwidth_mhz},
                  {"n_prb", C.n_prb},
                  {"prb_bandwidth_hz", C.prb_bandwidth_hz},
                  {"noise_figure_db", C.noise_figure_db},
                  {"thermal_noise_dbm_hz", C.thermal_noise_dbm_hz},
                  {"shadowing_sigma_db", C.shadowing_sigma_db},
                  {"shadowing_correlation", C.shadowing_correlation},
                  {"min_distance_m", C.min_distance_m},
                  {"psn_antenna", antenna_json(C.psn_antenna)},
                  {"lrn_antenna", antenna_json(C.lrn_antenna)},
                  {"uav_antenna", antenna_json(C.uav_antenna)}};
  j["traffic"] = {{"voip_fraction", T.voip_fraction},
                  {"voip_packet_bytes", T.voip_packet_bytes},
                  {"voip_period_ms", T.voip_period_ms},
                  {"video_rate_kbps", T.video_rate_kbps}};
  j["scheduler"] = {{"abs_subframes", S.abs_subframes},
                    {"feicic_power_scale", S.feicic_power_scale},
                    {"cre_bias_db", S.cre_bias_db},
                    {"edge_margin_db", S.edge_margin_db},
                    {"ewma_horizon_tti", S.ewma_horizon_tti},
                    {"avg_rate_init_bps", S.avg_rate_init_bps},
                    {"comp_cluster_size", S.comp_cluster_size},
                    {"icic_power_scale", S.icic_power_scale},
                    {"icic_edge_margin_db", S.icic_edge_margin_db}};
  j["assoc"] = {{"model_path", assoc.model_path},
                {"temperature", assoc.temperature},
                {"hidden", assoc.hidden},
                {"tile_users", sim.tile.users},
                {"tile_sectors", sim.tile.sectors},
                {"psi_max_offset_db", sim.psi_max_offset_db},
                {"dataset_path", assoc.dataset_path},
                {"dataset_samples", assoc.dataset_samples},
                {"min_live_users", assoc.min_live_users},
                {"max_live_users", assoc.max_live_users},
                {"train",
                 {{"epochs", assoc.train.epochs},
                  {"step", assoc.train.step},
                  {"batch_size", assoc.train.batch_size},
                  {"seed", assoc.train.seed}}}};
  j["simulation"] = {{"seeds", simulation.seeds},
                     {"n_drops", simulation.n_drops},
                     {"n_tti", simulation.n_tti},
                     {"threads", simulation.threads},
                     {"scenarios", simulation.scenarios},
                     {"out_dir", simulation.out_dir}};
  return j.dump();
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string AppConfig::hash() const { return sha256_hex(canonical_json()); }

std::vector<ScenarioConfig> AppConfig::selected_scenarios(const std::vector<std::string>& override_labels) const {
  const std::vector<std::string>& labels = override_labels.empty() ? simulation.scenarios : override_labels;
  std::vector<ScenarioConfig> out;
  if (labels.empty()) {
    for (const ScenarioConfig& s : scenario_catalog()) {
      if (!s.dl_assoc || !assoc.model_path.empty()) {
        out.push_back(s);
      }
    }
  } else {
    for (const std::string& l : labels) {
      const auto s = find_scenario(l);
      if (!s) {
        throw ConfigError("unknown scenario label '" + l + "'");
      }
      out.push_back(*s);
    }
  }
  for (ScenarioConfig& s : out) {
    s.seeds = simulation.seeds;
    s.n_drops = simulation.n_drops;
    s.n_tti = simulation.n_tti;
    s.validate(!assoc.model_path.empty());
  }
  return out;
}

}  // namespace icsim
