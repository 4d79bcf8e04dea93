#include "icsim/channel.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <string>

#include "icsim/rng.hpp"

namespace icsim {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kSpeedOfLight = 299792458.0;

double wrap_deg(double a) {
  a = std::fmod(a + 180.0, 360.0);
  if (a <= 0.0) {
    a += 360.0;
  }
  return a - 180.0;
}

double plane_attenuation(double angle_deg, double beamwidth_deg, double max_att_db) {
  if (beamwidth_deg <= 0.0) {
    return 0.0;
  }
  const double r = angle_deg / beamwidth_deg;
  return -std::min(12.0 * r * r, max_att_db);
}

}  // namespace

double pathloss_db(double freq_mhz, double bs_height_m, double dist_km) {
  if (!(freq_mhz > 0.0) || !(bs_height_m > 0.0) || !(dist_km > 0.0)) {
    throw std::domain_error("pathloss_db: arguments must be positive");
  }
  const double lf = std::log10(freq_mhz);
  const double lh = std::log10(bs_height_m);
  return 69.55 + 26.16 * lf - 13.82 * lh + (44.9 - 6.55 * lh) * std::log10(dist_km) - 4.78 * lf * lf +
         18.33 * lf - 40.94;
}

double antenna_gain(double theta_deg, double phi_deg, const AntennaPattern& pattern) {
  const double theta = wrap_deg(theta_deg);
  const double phi = wrap_deg(phi_deg);
  const double a_v = plane_attenuation(theta, pattern.v_beamwidth_deg, pattern.max_attenuation_db);
  const double a_h = plane_attenuation(phi, pattern.h_beamwidth_deg, pattern.max_attenuation_db);
  return pattern.peak_gain_dbi - std::min(-(a_v + a_h), pattern.max_attenuation_db);
}

LinkGain LinkGain::compose(double pathloss, double shadowing, double fading, double antenna_gain) {
  return {pathloss, shadowing, fading, antenna_gain, antenna_gain - pathloss - shadowing - fading};
}

Eigen::MatrixXd draw_shadowing(const NetworkLayout& layout, double sigma_db, double rho, std::uint64_t seed) {
  if (!(sigma_db > 0.0)) {
    throw std::invalid_argument("draw_shadowing: sigma must be positive");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("draw_shadowing: correlation must lie in [0, 1)");
  }
  const auto n_users = static_cast<Eigen::Index>(layout.users.size());
  const auto n_sites = static_cast<Eigen::Index>(layout.sites.size());
  Eigen::MatrixXd out(n_users, n_sites);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double a = std::sqrt(rho);
  const double b = std::sqrt(1.0 - rho);
  for (Eigen::Index u = 0; u < n_users; ++u) {
    const double common = z(rng);
    for (Eigen::Index s = 0; s < n_sites; ++s) {
      out(u, s) = sigma_db * (a * common + b * z(rng));
    }
  }
  return out;
}

double FadingTrace::at(int subframe) const {
  const auto block = static_cast<std::size_t>(std::max(subframe, 0) / block_length);
  return loss_db[std::min(block, loss_db.size() - 1)];
}

int coherence_subframes(double speed_mps, double freq_mhz) {
  if (speed_mps <= 0.0) {
    return 0;  // no Doppler: coherent for the whole drop
  }
  const double doppler_hz = speed_mps * freq_mhz * 1e6 / kSpeedOfLight;
  const double coherence_s = 0.423 / doppler_hz;
  return std::max(1, static_cast<int>(std::lround(coherence_s / 1e-3)));
}

FadingTrace draw_fading(FadingKind kind, double speed_mps, double freq_mhz, std::uint64_t seed,
                        int horizon_subframes) {
  if (speed_mps < 0.0) {
    throw std::invalid_argument("draw_fading: speed must be non-negative");
  }
  const int horizon = std::max(horizon_subframes, 1);
  FadingTrace trace;
  const int coherence = coherence_subframes(speed_mps, freq_mhz);
  trace.block_length = coherence == 0 ? horizon : coherence;
  const int n_blocks = (horizon + trace.block_length - 1) / trace.block_length;
  std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(kind)}));
  std::exponential_distribution<double> power(1.0);
  trace.loss_db.reserve(n_blocks);
  for (int k = 0; k < n_blocks; ++k) {
    trace.loss_db.push_back(-10.0 * std::log10(power(rng)));
  }
  return trace;
}

void ChannelParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::invalid_argument(std::string("invalid channel config: ") + what);
    }
  };
  require(carrier_mhz > 0.0, "carrier_mhz must be positive");
  require(bandwidth_mhz > 0.0, "bandwidth_mhz must be positive");
  require(n_prb > 0, "n_prb must be positive");
  require(prb_bandwidth_hz > 0.0, "prb_bandwidth_hz must be positive");
  require(n_prb * prb_bandwidth_hz <= bandwidth_mhz * 1e6, "PRBs exceed the system bandwidth");
  require(shadowing_sigma_db > 0.0, "shadowing_sigma_db must be positive");
  require(shadowing_correlation >= 0.0 && shadowing_correlation < 1.0, "shadowing_correlation must be in [0, 1)");
  require(min_distance_m > 0.0, "min_distance_m must be positive");
  for (const AntennaPattern* p : {&psn_antenna, &lrn_antenna, &uav_antenna}) {
    require(p->max_attenuation_db > 0.0 && p->h_beamwidth_deg >= 0.0 && p->v_beamwidth_deg >= 0.0,
            "antenna pattern parameters must be positive");
  }
}

double ChannelParams::noise_per_prb_dbm() const {
  return thermal_noise_dbm_hz + 10.0 * std::log10(prb_bandwidth_hz) + noise_figure_db;
}

const AntennaPattern& ChannelParams::pattern(NodeKind kind) const {
  switch (kind) {
    case NodeKind::PSN: return psn_antenna;
    case NodeKind::LRN: return lrn_antenna;
    case NodeKind::UAV: return uav_antenna;
  }
  return psn_antenna;
}

LinkGeometry link_geometry(const UserNode& user, const BSNode& sector, const ChannelParams& params) {
  const Vec2 d = user.position - sector.position;
  const double d2 = norm(d);
  const double dh = sector.antenna_height_m - user.height_m;
  const double d3 = std::max(std::hypot(d2, dh), params.min_distance_m);
  const AntennaPattern& pattern = params.pattern(sector.kind);
  const double bearing = std::atan2(d.y, d.x) * kRadToDeg;
  const double elevation = std::atan2(dh, std::max(d2, 1e-9)) * kRadToDeg;
  LinkGeometry g;
  g.pathloss_db = pathloss_db(params.carrier_mhz, sector.antenna_height_m, d3 / 1000.0);
  g.antenna_gain_dbi = antenna_gain(elevation - pattern.downtilt_deg, bearing - sector.azimuth_deg, pattern);
  return g;
}

ChannelRealization::ChannelRealization(const NetworkLayout& layout, const ChannelParams& params,
                                       std::uint64_t seed, int horizon_subframes)
    : params_(params),
      users_(static_cast<int>(layout.users.size())),
      sectors_(static_cast<int>(layout.sectors.size())),
      shadowing_seed_(derive_seed(seed, {1})) {
  params_.validate();
  for (const BSNode& n : layout.sectors) {
    sector_site_.push_back(n.site);
  }
  shadowing_ = draw_shadowing(layout, params_.shadowing_sigma_db, params_.shadowing_correlation, shadowing_seed_);
  fading_.reserve(static_cast<std::size_t>(users_) * sectors_);
  for (const UserNode& u : layout.users) {
    const FadingKind kind = u.kind == UserKind::LrnUser ? FadingKind::D2aLike : FadingKind::D1Like;
    for (int s = 0; s < sectors_; ++s) {
      const std::uint64_t link_seed =
          derive_seed(seed, {2, static_cast<std::uint64_t>(u.id), static_cast<std::uint64_t>(s)});
      fading_.push_back(draw_fading(kind, u.speed_mps, params_.carrier_mhz, link_seed, horizon_subframes));
    }
  }
  gains_.resize(static_cast<std::size_t>(users_) * sectors_);
  update_all(layout, 0);
}

int ChannelRealization::fading_block_length(int user) const {
  return fading_[index(user, 0)].block_length;
}

void ChannelRealization::update_user(const UserNode& user, const NetworkLayout& layout, int subframe) {
  for (int s = 0; s < sectors_; ++s) {
    const LinkGeometry g = link_geometry(user, layout.sectors[s], params_);
    const std::size_t k = index(user.id, s);
    gains_[k] = LinkGain::compose(g.pathloss_db, shadowing_(user.id, sector_site_[s]), fading_[k].at(subframe),
                                  g.antenna_gain_dbi);
  }
}

void ChannelRealization::update_all(const NetworkLayout& layout, int subframe) {
  for (const UserNode& u : layout.users) {
    update_user(u, layout, subframe);
  }
}

double ChannelRealization::long_term_gain_db(int user, int sector) const {
  const LinkGain& g = gain(user, sector);
  return g.antenna_gain - g.pathloss - g.shadowing;
}

double sinr_db(int user, int serving, const ChannelRealization& realization, std::span<const double> tx_mw,
               double noise_dbm) {
  if (!(tx_mw[serving] > 0.0)) {
    throw MutedServingError("serving sector " + std::to_string(serving) + " is muted");
  }
  double interference = 0.0;
  for (int s = 0; s < realization.sectors(); ++s) {
    if (s == serving || tx_mw[s] <= 0.0) {
      continue;
    }
    interference += tx_mw[s] * dbm_to_mw(realization.gain(user, s).total);
  }
  const double signal = tx_mw[serving] * dbm_to_mw(realization.gain(user, serving).total);
  return 10.0 * std::log10(signal / (interference + dbm_to_mw(noise_dbm)));
}

}  // namespace icsim
