#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace icsim {

enum class NodeKind { PSN, LRN, UAV };
enum class UserKind { PsnMu, LrnUser };

std::string to_string(NodeKind kind);
std::string to_string(UserKind kind);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
inline bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
double norm(Vec2 v);

struct Segment {
  Vec2 a;
  Vec2 b;

  double length() const;
  Vec2 direction() const;  // unit vector a -> b
  Vec2 at(double s) const; // point at arc length s from a
};

/// One transmitting sector (or omni cell for UAVs).
struct BSNode {
  int id = 0;
  NodeKind kind = NodeKind::PSN;
  int site = 0;  // index into NetworkLayout::sites
  Vec2 position;
  double antenna_height_m = 0.0;
  double azimuth_deg = 0.0;
  double tx_power_dbm = 0.0;
  int sector_index = 0;
};

struct UserNode {
  int id = 0;
  UserKind kind = UserKind::PsnMu;
  Vec2 position;
  double height_m = 1.5;
  double speed_mps = 0.0;
  Vec2 heading{1.0, 0.0};
  double track_pos_m = 0.0;  // arc length along the track, LRN users only
};

struct Site {
  int id = 0;
  NodeKind kind = NodeKind::PSN;
  Vec2 position;
};

struct NetworkLayout {
  std::vector<Site> sites;
  std::vector<BSNode> sectors;
  std::vector<UserNode> users;
  Segment track;
  std::vector<Vec2> region_of_interest;  // convex polygon, counter-clockwise

  int count_sectors(NodeKind kind) const;
  int count_users(UserKind kind) const;
};

struct LayoutConfig {
  double psn_isd_m = 4000.0;
  double lrn_isd_m = 1000.0;
  double region_radius_m = 2000.0;
  int psn_sectors_per_site = 3;
  int n_lrn_sites = 4;
  int lrn_sectors_per_site = 2;
  int n_uavs = 2;
  double track_offset_m = -500.0;    // signed distance of the track from the centre site
  double lrn_side_offset_m = 50.0;   // distance of LRN masts from the rail
  double psn_tx_power_dbm = 46.0;
  double lrn_tx_power_dbm = 43.0;
  double uav_tx_power_dbm = 30.0;
  double psn_height_m = 30.0;
  double lrn_height_m = 30.0;
  double uav_height_m = 100.0;
  double ue_height_m = 1.5;
  double train_speed_mps = 83.3;

  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

NetworkLayout build_default_layout(std::uint64_t seed, int n_psn_users, const LayoutConfig& config);

/// Moves LRN users along the track (reflecting at the ends). PSN MUs are static.
NetworkLayout advance_users(NetworkLayout layout, double dt_s);

/// Reflects an unbounded arc-length coordinate into [0, length]. Returns the
/// folded position and whether the direction of travel is reversed.
std::pair<double, bool> reflect_on_segment(double s, double length);

bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon);

/// Regular hexagon with vertices at 0, 60, ... 300 degrees.
std::vector<Vec2> hexagon(Vec2 centre, double circumradius);

std::string layout_to_json(const NetworkLayout& layout);

}  // namespace icsim
