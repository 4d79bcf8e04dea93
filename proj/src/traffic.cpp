#include "icsim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace icsim {

void TrafficConfig::validate() const {
  if (!(voip_fraction >= 0.0 && voip_fraction <= 1.0)) {
    throw std::invalid_argument("invalid traffic config: voip_fraction must be in [0, 1]");
  }
  if (!(voip_packet_bytes > 0.0) || !(voip_period_ms > 0.0) || !(video_rate_kbps > 0.0)) {
    throw std::invalid_argument("invalid traffic config: packet size, period and video rate must be positive");
  }
}

TrafficProfile TrafficConfig::voip() const {
  return {TrafficKind::Voip, voip_packet_bytes, voip_period_ms, voip_packet_bytes * 8.0 / voip_period_ms};
}

TrafficProfile TrafficConfig::video() const {
  return {TrafficKind::Video, 0.0, 0.0, video_rate_kbps};
}

std::vector<TrafficProfile> assign_profiles(std::span<const UserNode> users, double voip_fraction,
                                            std::uint64_t seed, const TrafficConfig& config) {
  if (!(voip_fraction >= 0.0 && voip_fraction <= 1.0)) {
    throw std::invalid_argument("assign_profiles: voip_fraction must be in [0, 1]");
  }
  std::vector<int> psn;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (users[i].kind == UserKind::PsnMu) {
      psn.push_back(static_cast<int>(i));
    }
  }
  const auto n_voip = static_cast<std::size_t>(std::floor(static_cast<double>(psn.size()) * voip_fraction + 0.5));
  std::mt19937_64 rng(seed);
  std::shuffle(psn.begin(), psn.end(), rng);

  std::vector<TrafficProfile> out(users.size(), config.voip());
  for (std::size_t k = n_voip; k < psn.size(); ++k) {
    out[psn[k]] = config.video();
  }
  return out;
}

QueueState step_arrivals(QueueState queue, const TrafficProfile& profile, double dt_ms) {
  if (!(dt_ms > 0.0)) {
    throw std::invalid_argument("step_arrivals: dt must be positive");
  }
  double bytes = 0.0;
  if (profile.kind == TrafficKind::Voip) {
    // Packets at phase + k * period, counted on (cursor, cursor + dt].
    const double p = profile.inter_arrival_ms;
    const double before = std::floor((queue.cursor_ms - queue.phase_ms) / p);
    const double after = std::floor((queue.cursor_ms + dt_ms - queue.phase_ms) / p);
    bytes = std::max(0.0, after - before) * profile.packet_bytes;
  } else {
    bytes = profile.rate_kbps * 1e3 / 8.0 * dt_ms * 1e-3;
  }
  if (queue.backlog_bytes > 0.0) {
    queue.head_of_line_delay_ms += dt_ms;
  }
  queue.backlog_bytes += bytes;
  queue.arrived_bytes += bytes;
  queue.cursor_ms += dt_ms;
  return queue;
}

QueueState drain(QueueState queue, double served_bytes) {
  if (served_bytes < 0.0) {
    throw std::invalid_argument("drain: served bytes must be non-negative");
  }
  const double take = std::min(served_bytes, queue.backlog_bytes);
  queue.backlog_bytes -= take;
  queue.served_bytes += take;
  if (queue.backlog_bytes <= 0.0) {
    queue.backlog_bytes = 0.0;
    queue.head_of_line_delay_ms = 0.0;
  }
  return queue;
}

}  // namespace icsim
