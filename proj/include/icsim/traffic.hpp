#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "icsim/layout.hpp"

namespace icsim {

enum class TrafficKind { Voip, Video };

struct TrafficProfile {
  TrafficKind kind = TrafficKind::Voip;
  double packet_bytes = 40.0;
  double inter_arrival_ms = 20.0;
  double rate_kbps = 16.0;

  /// Offered load in bit/s.
  double offered_bps() const { return rate_kbps * 1e3; }
};

struct TrafficConfig {
  double voip_fraction = 0.8;
  double voip_packet_bytes = 40.0;
  double voip_period_ms = 20.0;
  double video_rate_kbps = 500.0;

  void validate() const;
  TrafficProfile voip() const;
  TrafficProfile video() const;
};

/// Profiles indexed by user id. PSN MUs get round-half-up(n * voip_fraction)
/// VoIP profiles (which ones is drawn from `seed`), LRN users are always VoIP.
std::vector<TrafficProfile> assign_profiles(std::span<const UserNode> users, double voip_fraction,
                                            std::uint64_t seed, const TrafficConfig& config = {});

struct QueueState {
  double backlog_bytes = 0.0;
  double head_of_line_delay_ms = 0.0;
  double cursor_ms = 0.0;   // time already generated
  double phase_ms = 0.0;    // VoIP packet offset within the period
  double arrived_bytes = 0.0;
  double served_bytes = 0.0;
};

QueueState step_arrivals(QueueState queue, const TrafficProfile& profile, double dt_ms);

QueueState drain(QueueState queue, double served_bytes);

}  // namespace icsim
