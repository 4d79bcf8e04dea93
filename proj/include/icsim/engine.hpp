#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "icsim/assoc.hpp"
#include "icsim/channel.hpp"
#include "icsim/features.hpp"
#include "icsim/layout.hpp"
#include "icsim/mlp.hpp"
#include "icsim/scenario.hpp"
#include "icsim/scheduler.hpp"
#include "icsim/traffic.hpp"

namespace icsim {

inline constexpr double kSpectralEfficiencyCap = 5.55;  // b/s/Hz
inline constexpr double kRateFloorSinrDb = -10.0;

/// Capped Shannon link-to-rate map. Zero below the SINR floor.
double rate_map(double sinr_db, int n_prb, double prb_bandwidth_hz);

/// Everything that shapes one drop apart from the scenario switches.
struct SimParams {
  LayoutConfig layout;
  ChannelParams channel;
  TrafficConfig traffic;
  SchedulerConfig scheduler;
  int n_psn_users = 120;
  TileShape tile;
  double psi_max_offset_db = 0.0;  // per-sector power ceiling relative to tx power

  void validate() const;
};

/// One Monte-Carlo realisation shared by every scenario (common random numbers).
struct Drop {
  NetworkLayout layout;
  ChannelRealization channel;
  std::vector<TrafficProfile> profiles;
  std::uint64_t seed = 0;
};

std::uint64_t drop_seed(std::uint64_t seed, int drop);
Drop make_drop(const SimParams& params, std::uint64_t seed, int horizon_subframes);

/// Transmit power on one PRB (sector power split evenly over the carrier).
double prb_power_dbm(const BSNode& sector, int n_prb);

/// Per-PRB received power (dBm) per user x sector with the current link gain.
Eigen::MatrixXd received_dbm(const NetworkLayout& layout, const ChannelRealization& channel, int n_prb);

/// Same without fast fading (reference-signal average).
Eigen::MatrixXd long_term_rsrp_dbm(const NetworkLayout& layout, const ChannelRealization& channel, int n_prb);

/// Full-carrier rate a user would get from each sector under full load.
/// Where ABS protection applies (victim sector, edge user) the PSN layer is
/// scaled by the ABS power factor.
std::vector<double> effective_rates(const Drop& drop, const SimParams& params, const ScenarioConfig& scenario,
                                    int user);

/// Association tile around `users` (first entry is the anchor). Columns are
/// the top tile.sectors candidates by summed effective rate.
struct Tile {
  AssocInstance instance;
  FeasibilityBounds bounds;
  std::vector<int> sector_ids;
};
Tile build_tile(const Drop& drop, const SimParams& params, const ScenarioConfig& scenario, std::span<const int> users);

/// Oracle-labelled tiles from fresh drops. Live users per tile uniform in [min_live, max_live].
std::vector<TrainingSample> sample_training_set(const SimParams& params, const ScenarioConfig& scenario, int n_samples,
                                                std::uint64_t seed, int min_live, int max_live);

/// Serving sector of every user at the start of a drop.
std::vector<int> initial_association(const Drop& drop, const SimParams& params, const ScenarioConfig& scenario,
                                     const MLPModel* model);

struct DropAudit {
  long long muted_checks = 0;        // allocated PRBs with a muted or blanked aggressor
  long long muted_violations = 0;    // of those, SINR below the unmuted counterfactual
  long long lrn_backlog_events = 0;  // (sector, TTI) with a backlogged LRN user
  long long lrn_priority_violations = 0;
  long long overbooked_prbs = 0;     // muted PRBs carrying data
  double arrived_bits = 0.0;
  double served_bits = 0.0;
  int ttis = 0;

  void merge(const DropAudit& other);
};

/// Per-PSN-MU samples from one drop.
struct DropFragment {
  std::vector<double> throughput_bps;
  std::vector<double> sinr_db;
  std::vector<double> interference_dbm;
  std::vector<int> serving;
  DropAudit audit;
};

DropFragment run_drop(const Drop& drop, const ScenarioConfig& scenario, const SimParams& params,
                      const MLPModel* model);

struct CdfPoint {
  double value = 0.0;
  double cdf = 0.0;
};

/// Sorted samples with cumulative probability i/n.
std::vector<CdfPoint> empirical_cdf(std::vector<double> samples);
std::vector<CdfPoint> interference_cdf(std::span<const double> samples);
/// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> samples, double q);
/// Fraction of samples strictly below each threshold. Throws on empty samples.
std::vector<std::pair<double, double>> outage_curve(std::span<const double> sinr_samples,
                                                    std::span<const double> thresholds_db);

struct MetricsReport {
  std::string scenario_label;
  std::vector<double> throughput_samples;
  std::vector<double> sinr_samples;
  std::vector<double> interference_samples;
  DropAudit audit;
  int drops = 0;

  void merge(const DropFragment& fragment);
  std::vector<CdfPoint> throughput_cdf() const { return empirical_cdf(throughput_samples); }
  std::vector<CdfPoint> sinr_cdf() const { return empirical_cdf(sinr_samples); }
  std::vector<CdfPoint> interference_cdf() const { return empirical_cdf(interference_samples); }
};

/// Runs every (scenario, seed, drop) on `threads` workers (0: hardware
/// concurrency) and merges fragments in (scenario, seed, drop) order.
std::vector<MetricsReport> run_scenarios(const SimParams& params, const std::vector<ScenarioConfig>& scenarios,
                                         const MLPModel* model, int threads);

}  // namespace icsim
