#include "icsim/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace icsim {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw std::invalid_argument("invalid layout config: " + what);
  }
}

Vec2 polar(double radius, double angle_deg) {
  return {radius * std::cos(angle_deg * kDegToRad), radius * std::sin(angle_deg * kDegToRad)};
}

// Chord of the region hexagon along the horizontal line y = offset.
Segment track_chord(double circumradius, double offset) {
  const double apothem = circumradius * std::sqrt(3.0) / 2.0;
  require(std::abs(offset) < apothem, "track offset leaves the region of interest (degenerate track)");
  const double half = circumradius - std::abs(offset) / std::sqrt(3.0);
  return {{-half, offset}, {half, offset}};
}

}  // namespace

std::string to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::PSN: return "PSN";
    case NodeKind::LRN: return "LRN";
    case NodeKind::UAV: return "UAV";
  }
  return "?";
}

std::string to_string(UserKind kind) {
  return kind == UserKind::PsnMu ? "PSN_MU" : "LRN_USER";
}

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

double Segment::length() const { return norm(b - a); }

Vec2 Segment::direction() const {
  const double len = length();
  return {(b.x - a.x) / len, (b.y - a.y) / len};
}

Vec2 Segment::at(double s) const { return a + s * direction(); }

int NetworkLayout::count_sectors(NodeKind kind) const {
  return static_cast<int>(std::count_if(sectors.begin(), sectors.end(),
                                        [kind](const BSNode& n) { return n.kind == kind; }));
}

int NetworkLayout::count_users(UserKind kind) const {
  return static_cast<int>(std::count_if(users.begin(), users.end(),
                                        [kind](const UserNode& u) { return u.kind == kind; }));
}

void LayoutConfig::validate() const {
  require(psn_isd_m > 0.0, "psn_isd_m must be positive");
  require(lrn_isd_m > 0.0, "lrn_isd_m must be positive");
  require(region_radius_m > 0.0, "region_radius_m must be positive");
  require(psn_sectors_per_site > 0, "psn_sectors_per_site must be positive");
  require(n_lrn_sites > 0, "n_lrn_sites must be positive");
  require(lrn_sectors_per_site > 0, "lrn_sectors_per_site must be positive");
  require(n_uavs > 0 && n_uavs <= 6, "n_uavs must be in [1, 6]");
  require(psn_tx_power_dbm > 0.0 && lrn_tx_power_dbm > 0.0 && uav_tx_power_dbm > 0.0,
          "tx powers must be > 0 dBm");
  require(psn_height_m > 0.0 && lrn_height_m > 0.0 && uav_height_m > 0.0 && ue_height_m > 0.0,
          "antenna heights must be positive");
  require(lrn_side_offset_m >= 0.0, "lrn_side_offset_m must be non-negative");
  require(train_speed_mps >= 0.0, "train_speed_mps must be non-negative");

  const Segment track = track_chord(region_radius_m, track_offset_m);
  const double span = (n_lrn_sites - 1) * lrn_isd_m;
  require(span <= track.length(), "track too short for the LRN sites");
}

std::vector<Vec2> hexagon(Vec2 centre, double circumradius) {
  std::vector<Vec2> out;
  out.reserve(6);
  for (int k = 0; k < 6; ++k) {
    out.push_back(centre + polar(circumradius, 60.0 * k));
  }
  return out;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon) {
  // Even-odd ray casting; boundary points count as inside for convex input.
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[j];
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    const bool on_edge = std::abs(cross) < 1e-9 && std::min(a.x, b.x) - 1e-9 <= p.x &&
                         p.x <= std::max(a.x, b.x) + 1e-9 && std::min(a.y, b.y) - 1e-9 <= p.y &&
                         p.y <= std::max(a.y, b.y) + 1e-9;
    if (on_edge) {
      return true;
    }
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

NetworkLayout build_default_layout(std::uint64_t seed, int n_psn_users, const LayoutConfig& config) {
  if (n_psn_users < 1) {
    throw std::invalid_argument("n_psn_users must be >= 1");
  }
  config.validate();

  NetworkLayout layout;
  layout.region_of_interest = hexagon({0.0, 0.0}, config.region_radius_m);
  layout.track = track_chord(config.region_radius_m, config.track_offset_m);

  // One tier of PSN sites around the centre of interest.
  std::vector<Vec2> psn_sites{{0.0, 0.0}};
  for (int k = 0; k < 6; ++k) {
    psn_sites.push_back(polar(config.psn_isd_m, 60.0 * k));
  }
  for (const Vec2& p : psn_sites) {
    const int site = static_cast<int>(layout.sites.size());
    layout.sites.push_back({site, NodeKind::PSN, p});
    for (int k = 0; k < config.psn_sectors_per_site; ++k) {
      BSNode node;
      node.id = static_cast<int>(layout.sectors.size());
      node.kind = NodeKind::PSN;
      node.site = site;
      node.position = p;
      node.antenna_height_m = config.psn_height_m;
      node.azimuth_deg = std::fmod(30.0 + 360.0 * k / config.psn_sectors_per_site, 360.0);
      node.tx_power_dbm = config.psn_tx_power_dbm;
      node.sector_index = k;
      layout.sectors.push_back(node);
    }
  }

  // LRN masts alternate between the two sides of the rail, evenly spaced along it.
  const Segment& track = layout.track;
  const Vec2 dir = track.direction();
  const Vec2 normal{-dir.y, dir.x};
  const double mid = track.length() / 2.0;
  std::vector<double> lrn_arc;
  for (int k = 0; k < config.n_lrn_sites; ++k) {
    const double s = mid + (k - (config.n_lrn_sites - 1) / 2.0) * config.lrn_isd_m;
    const double side = (k % 2 == 0) ? 1.0 : -1.0;
    const Vec2 p = track.at(s) + (side * config.lrn_side_offset_m) * normal;
    lrn_arc.push_back(s);
    const int site = static_cast<int>(layout.sites.size());
    layout.sites.push_back({site, NodeKind::LRN, p});
    const double along = std::atan2(dir.y, dir.x) / kDegToRad;
    for (int q = 0; q < config.lrn_sectors_per_site; ++q) {
      BSNode node;
      node.id = static_cast<int>(layout.sectors.size());
      node.kind = NodeKind::LRN;
      node.site = site;
      node.position = p;
      node.antenna_height_m = config.lrn_height_m;
      double az = std::fmod(along + 360.0 * q / config.lrn_sectors_per_site, 360.0);
      if (az < 0.0) {
        az += 360.0;
      }
      node.azimuth_deg = az;
      node.tx_power_dbm = config.lrn_tx_power_dbm;
      node.sector_index = q;
      layout.sectors.push_back(node);
    }
  }

  // UAVs hover over opposite vertices of the centre cell boundary.
  static constexpr int kUavVertexOrder[6] = {2, 5, 1, 4, 0, 3};
  for (int k = 0; k < config.n_uavs; ++k) {
    const Vec2 p = layout.region_of_interest[kUavVertexOrder[k]];
    const int site = static_cast<int>(layout.sites.size());
    layout.sites.push_back({site, NodeKind::UAV, p});
    BSNode node;
    node.id = static_cast<int>(layout.sectors.size());
    node.kind = NodeKind::UAV;
    node.site = site;
    node.position = p;
    node.antenna_height_m = config.uav_height_m;
    node.azimuth_deg = 0.0;
    node.tx_power_dbm = config.uav_tx_power_dbm;
    node.sector_index = 0;
    layout.sectors.push_back(node);
  }

  std::mt19937_64 rng(seed);
  const double r = config.region_radius_m;
  std::uniform_real_distribution<double> ux(-r, r);
  std::uniform_real_distribution<double> uy(-r, r);
  for (int i = 0; i < n_psn_users; ++i) {
    Vec2 p;
    do {
      p = {ux(rng), uy(rng)};
    } while (!point_in_polygon(p, layout.region_of_interest));
    UserNode u;
    u.id = i;
    u.kind = UserKind::PsnMu;
    u.position = p;
    u.height_m = config.ue_height_m;
    u.speed_mps = 0.0;
    layout.users.push_back(u);
  }

  // One train user per LRN serving area.
  const double len = track.length();
  for (int k = 0; k < config.n_lrn_sites; ++k) {
    const double lo = std::max(0.0, lrn_arc[k] - config.lrn_isd_m / 2.0);
    const double hi = std::min(len, lrn_arc[k] + config.lrn_isd_m / 2.0);
    std::uniform_real_distribution<double> us(lo, hi);
    const double s = us(rng);
    const bool forward = std::bernoulli_distribution(0.5)(rng);
    UserNode u;
    u.id = static_cast<int>(layout.users.size());
    u.kind = UserKind::LrnUser;
    u.track_pos_m = s;
    u.position = track.at(s);
    u.height_m = config.ue_height_m;
    u.speed_mps = config.train_speed_mps;
    u.heading = forward ? dir : Vec2{-dir.x, -dir.y};
    layout.users.push_back(u);
  }
  return layout;
}

std::pair<double, bool> reflect_on_segment(double s, double length) {
  if (length <= 0.0) {
    return {0.0, false};
  }
  const double period = 2.0 * length;
  double m = std::fmod(s, period);
  if (m < 0.0) {
    m += period;
  }
  if (m <= length) {
    return {m, false};
  }
  return {period - m, true};
}

NetworkLayout advance_users(NetworkLayout layout, double dt_s) {
  if (!(dt_s > 0.0)) {
    throw std::invalid_argument("advance_users: dt must be positive");
  }
  const Vec2 dir = layout.track.direction();
  const double len = layout.track.length();
  for (UserNode& u : layout.users) {
    if (u.kind != UserKind::LrnUser || u.speed_mps == 0.0) {
      continue;
    }
    const double sign = (u.heading.x * dir.x + u.heading.y * dir.y) >= 0.0 ? 1.0 : -1.0;
    const auto [s, flipped] = reflect_on_segment(u.track_pos_m + sign * u.speed_mps * dt_s, len);
    u.track_pos_m = s;
    u.position = layout.track.at(s);
    if (flipped) {
      u.heading = {-u.heading.x, -u.heading.y};
    }
  }
  return layout;
}

std::string layout_to_json(const NetworkLayout& layout) {
  using nlohmann::json;
  json j;
  auto pt = [](Vec2 p) { return json::array({p.x, p.y}); };
  for (const Site& s : layout.sites) {
    j["sites"].push_back({{"id", s.id}, {"kind", to_string(s.kind)}, {"position", pt(s.position)}});
  }
  for (const BSNode& n : layout.sectors) {
    j["sectors"].push_back({{"id", n.id},
                            {"kind", to_string(n.kind)},
                            {"site", n.site},
                            {"position", pt(n.position)},
                            {"antenna_height_m", n.antenna_height_m},
                            {"azimuth_deg", n.azimuth_deg},
                            {"tx_power_dbm", n.tx_power_dbm},
                            {"sector_index", n.sector_index}});
  }
  for (const UserNode& u : layout.users) {
    j["users"].push_back({{"id", u.id},
                          {"kind", to_string(u.kind)},
                          {"position", pt(u.position)},
                          {"speed_mps", u.speed_mps},
                          {"heading", pt(u.heading)}});
  }
  j["track"] = json::array({pt(layout.track.a), pt(layout.track.b)});
  for (const Vec2& v : layout.region_of_interest) {
    j["region_of_interest"].push_back(pt(v));
  }
  return j.dump(2);
}

}  // namespace icsim
