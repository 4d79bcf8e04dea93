#pragma once

#include <array>
#include <bitset>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "icsim/layout.hpp"

namespace icsim {

inline constexpr int kAbsPeriod = 40;

/// Almost-blank-subframe schedule of the aggressor (PSN) layer.
/// power_scale 0 is an absolute blank (eICIC), 0 < scale < 1 a reduced-power ABS (FeICIC).
struct AbsPattern {
  std::bitset<kAbsPeriod> bitmap;
  double power_scale = 1.0;

  bool enabled() const { return bitmap.any(); }
  bool is_abs(int subframe) const { return bitmap.test(static_cast<std::size_t>(subframe % kAbsPeriod)); }
  /// Data power factor of an aggressor in `subframe`.
  double power_at(int subframe) const { return is_abs(subframe) ? power_scale : 1.0; }

  static AbsPattern none();
  /// n_abs blank subframes spread evenly over the 40-subframe period.
  static AbsPattern evenly_spaced(int n_abs, double power_scale);
};

struct SchedulerConfig {
  int abs_subframes = 10;
  double feicic_power_scale = 0.25;
  double cre_bias_db = 6.0;
  double edge_margin_db = 6.0;      // RSRP margin separating centre and edge users
  int ewma_horizon_tti = 100;
  double avg_rate_init_bps = 1e3;
  int comp_cluster_size = 2;        // aggressors muted per protected user
  double icic_power_scale = 0.25;   // out-of-band power of a PSN sector in ICIC mode
  double icic_edge_margin_db = 3.0;

  void validate() const;
};

/// Per-user exponentially averaged served rate (the PF denominator).
struct SchedulerState {
  std::vector<double> avg_rate_bps;
  int ewma_horizon = 100;

  SchedulerState() = default;
  SchedulerState(int n_users, int horizon, double init_bps);

  void update(int user, double served_bps);
};

/// PF winner: argmax inst/avg over candidates, ties to the lowest id.
/// Returns nullopt for an empty candidate set.
std::optional<int> pf_select(std::span<const int> candidates, std::span<const double> inst_rate,
                             std::span<const double> avg_rate);

struct PrbAllocation {
  std::vector<int> owner;          // user per PRB, -1 when empty
  std::vector<bool> lrn_priority;  // PRB carries a priority (LRN) user

  explicit PrbAllocation(int n_prb = 0) : owner(n_prb, -1), lrn_priority(n_prb, false) {}
  int n_prb() const { return static_cast<int>(owner.size()); }
  int allocated() const;
  std::vector<int> prbs_of(int user) const;
};

/// Scheduling view of one attached user for one TTI.
struct AttachedUser {
  int id = 0;
  bool lrn_priority = false;
  double backlog_bits = 0.0;
  std::array<double, 3> prb_rate_bps{};  // single-PRB rate in each PRB third
  bool centre = true;   // may use reduced-power ABS at a PSN sector
  bool edge = false;    // victim-cell edge user: served only in protected subframes
  int icic_third = -1;  // restricted to one PRB third when >= 0
};

struct SectorTti {
  int sector_id = 0;
  NodeKind kind = NodeKind::PSN;
  int subframe = 0;
  int n_prb = 50;
  const AbsPattern* abs = nullptr;  // network ABS pattern, nullptr when off
  std::vector<bool> muted;          // CoMP-muted PRBs at this sector (empty: none)
  double tti_s = 1e-3;
};

int prb_third(int prb, int n_prb);

/// Lowest free, unmuted PRBs given to LRN users with backlog, in id order.
PrbAllocation allocate_priority(const SectorTti& ctx, std::span<const AttachedUser> attached);

/// Full per-sector allocation: LRN priority first, then repeated PF over the
/// remaining PRBs. Updates the EWMA of every attached user with its scheduled rate.
PrbAllocation schedule_tti(const SectorTti& ctx, std::span<const AttachedUser> attached, SchedulerState& state);

struct AttachCandidate {
  int sector = 0;
  NodeKind kind = NodeKind::PSN;
  double rx_dbm = 0.0;
};

/// Serving sector by biased max-RSRP. The bias is added to LRN/UAV sectors only
/// when RAC sharing is on; without sharing only PSN candidates are eligible.
int cre_attach_bias(std::span<const AttachCandidate> candidates, double bias_db, bool sharing);

using PairClass = std::pair<NodeKind, NodeKind>;

/// Unordered node-kind pairs allowed to coordinate.
std::vector<PairClass> default_comp_pairs();
bool pair_allowed(NodeKind a, NodeKind b, std::span<const PairClass> pairs);

struct CompAgreement {
  std::pair<int, int> pair;  // (victim sector, aggressor sector)
  std::vector<int> muted_prbs;
};

class CompPairError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

CompAgreement comp_mute(const PrbAllocation& victim_schedule, int victim, NodeKind victim_kind, int aggressor,
                        NodeKind aggressor_kind, std::span<const PairClass> pairs);

}  // namespace icsim
