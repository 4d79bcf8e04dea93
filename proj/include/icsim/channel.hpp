#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "icsim/layout.hpp"

namespace icsim {

/// Macro-cell pathloss in dB. freq in MHz, bs_height in m, dist in km.
/// Throws std::domain_error on non-positive arguments.
double pathloss_db(double freq_mhz, double bs_height_m, double dist_km);

/// Parabolic 3D sector pattern. A zero beamwidth disables that plane
/// (omni horizontally, or no vertical shaping).
struct AntennaPattern {
  double peak_gain_dbi = 15.0;
  double h_beamwidth_deg = 65.0;
  double v_beamwidth_deg = 10.0;
  double max_attenuation_db = 30.0;
  double downtilt_deg = 3.0;
};

/// theta: vertical angle off boresight, phi: horizontal angle off boresight.
double antenna_gain(double theta_deg, double phi_deg, const AntennaPattern& pattern);

/// Positive pathloss/shadowing/fading are losses.
struct LinkGain {
  double pathloss = 0.0;
  double shadowing = 0.0;
  double fading = 0.0;
  double antenna_gain = 0.0;
  double total = 0.0;

  static LinkGain compose(double pathloss, double shadowing, double fading, double antenna_gain);
};

/// Users x sites matrix of shadowing values in dB.
Eigen::MatrixXd draw_shadowing(const NetworkLayout& layout, double sigma_db, double rho, std::uint64_t seed);

enum class FadingKind { D1Like, D2aLike };

/// Block-Rayleigh fading: one loss value (dB) per coherence block.
struct FadingTrace {
  int block_length = 1;  // subframes
  std::vector<double> loss_db;

  double at(int subframe) const;
};

int coherence_subframes(double speed_mps, double freq_mhz);

FadingTrace draw_fading(FadingKind kind, double speed_mps, double freq_mhz, std::uint64_t seed,
                        int horizon_subframes);

struct ChannelParams {
  double carrier_mhz = 700.0;
  double bandwidth_mhz = 10.0;
  int n_prb = 50;
  double prb_bandwidth_hz = 180e3;
  double noise_figure_db = 9.0;
  double thermal_noise_dbm_hz = -174.0;
  double shadowing_sigma_db = 8.0;
  double shadowing_correlation = 0.5;
  double min_distance_m = 35.0;
  AntennaPattern psn_antenna{15.0, 65.0, 10.0, 30.0, 3.0};
  AntennaPattern lrn_antenna{15.0, 65.0, 10.0, 30.0, 3.0};
  AntennaPattern uav_antenna{3.0, 0.0, 0.0, 30.0, 0.0};

  void validate() const;
  double noise_per_prb_dbm() const;
  const AntennaPattern& pattern(NodeKind kind) const;
};

/// Long-term (pathloss + antenna) geometry of one link, before shadowing and fading.
struct LinkGeometry {
  double pathloss_db = 0.0;
  double antenna_gain_dbi = 0.0;
};

LinkGeometry link_geometry(const UserNode& user, const BSNode& sector, const ChannelParams& params);

/// Per-link state for one drop. Shadowing is fixed per drop, fading is drawn
/// per link for the whole horizon.
class ChannelRealization {
 public:
  ChannelRealization(const NetworkLayout& layout, const ChannelParams& params, std::uint64_t seed,
                     int horizon_subframes);

  int users() const { return users_; }
  int sectors() const { return sectors_; }
  std::uint64_t shadowing_seed() const { return shadowing_seed_; }
  double carrier_mhz() const { return params_.carrier_mhz; }
  int fading_block_length(int user) const;

  const LinkGain& gain(int user, int sector) const { return gains_[index(user, sector)]; }

  /// Re-evaluates every link of `user` for the given position and subframe.
  void update_user(const UserNode& user, const NetworkLayout& layout, int subframe);

  /// Recomputes every link (all users) at the given subframe.
  void update_all(const NetworkLayout& layout, int subframe);

  /// Gain excluding fast fading (what a reference-signal power average sees).
  double long_term_gain_db(int user, int sector) const;

  const Eigen::MatrixXd& shadowing() const { return shadowing_; }

 private:
  std::size_t index(int user, int sector) const {
    return static_cast<std::size_t>(user) * sectors_ + sector;
  }

  ChannelParams params_;
  int users_ = 0;
  int sectors_ = 0;
  std::uint64_t shadowing_seed_ = 0;
  std::vector<int> sector_site_;
  Eigen::MatrixXd shadowing_;
  std::vector<FadingTrace> fading_;
  std::vector<LinkGain> gains_;
};

class MutedServingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// SINR (dB) of `user` served by `serving`. tx_mw holds every sector's
/// current transmit power in mW on the PRB of interest; 0 means muted.
double sinr_db(int user, int serving, const ChannelRealization& realization, std::span<const double> tx_mw,
               double noise_dbm);

}  // namespace icsim
