#include "icsim/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace icsim {

AbsPattern AbsPattern::none() { return {}; }

AbsPattern AbsPattern::evenly_spaced(int n_abs, double power_scale) {
  if (n_abs < 0 || n_abs > kAbsPeriod) {
    throw std::invalid_argument("ABS count must be in [0, 40]");
  }
  if (!(power_scale >= 0.0 && power_scale < 1.0)) {
    throw std::invalid_argument("ABS power scale must be in [0, 1)");
  }
  AbsPattern p;
  p.power_scale = power_scale;
  for (int k = 0; k < n_abs; ++k) {
    p.bitmap.set(static_cast<std::size_t>(k * kAbsPeriod / n_abs));
  }
  return p;
}

void SchedulerConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::invalid_argument(std::string("invalid scheduler config: ") + what);
    }
  };
  require(abs_subframes >= 0 && abs_subframes <= kAbsPeriod, "abs_subframes must be in [0, 40]");
  require(feicic_power_scale > 0.0 && feicic_power_scale < 1.0, "feicic_power_scale must be in (0, 1)");
  require(cre_bias_db >= 0.0, "cre_bias_db must be non-negative");
  require(ewma_horizon_tti >= 1, "ewma_horizon_tti must be >= 1");
  require(avg_rate_init_bps > 0.0, "avg_rate_init_bps must be positive");
  require(comp_cluster_size >= 0, "comp_cluster_size must be non-negative");
  require(icic_power_scale >= 0.0 && icic_power_scale <= 1.0, "icic_power_scale must be in [0, 1]");
}

SchedulerState::SchedulerState(int n_users, int horizon, double init_bps)
    : avg_rate_bps(static_cast<std::size_t>(n_users), init_bps), ewma_horizon(horizon) {}

void SchedulerState::update(int user, double served_bps) {
  const double a = 1.0 / ewma_horizon;
  double& avg = avg_rate_bps[static_cast<std::size_t>(user)];
  avg = (1.0 - a) * avg + a * served_bps;
}

std::optional<int> pf_select(std::span<const int> candidates, std::span<const double> inst_rate,
                             std::span<const double> avg_rate) {
  std::optional<int> best;
  double best_metric = 0.0;
  for (int c : candidates) {
    const double metric = inst_rate[c] / avg_rate[c];
    if (!best || metric > best_metric || (metric == best_metric && c < *best)) {
      best = c;
      best_metric = metric;
    }
  }
  return best;
}

int PrbAllocation::allocated() const {
  return static_cast<int>(std::count_if(owner.begin(), owner.end(), [](int u) { return u >= 0; }));
}

std::vector<int> PrbAllocation::prbs_of(int user) const {
  std::vector<int> out;
  for (int p = 0; p < n_prb(); ++p) {
    if (owner[p] == user) {
      out.push_back(p);
    }
  }
  return out;
}

int prb_third(int prb, int n_prb) { return std::min(2, prb * 3 / n_prb); }

namespace {

bool is_muted(const SectorTti& ctx, int prb) {
  return !ctx.muted.empty() && ctx.muted[static_cast<std::size_t>(prb)];
}

// Attached users ordered by id so that local index order matches id order.
std::vector<std::size_t> by_id(std::span<const AttachedUser> attached) {
  std::vector<std::size_t> order(attached.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return attached[a].id < attached[b].id; });
  return order;
}

int n_prb_of(const SectorTti& ctx) { return ctx.n_prb; }

}  // namespace

PrbAllocation allocate_priority(const SectorTti& ctx, std::span<const AttachedUser> attached) {
  const int n_prb = n_prb_of(ctx);
  PrbAllocation alloc(n_prb);
  int next = 0;
  for (std::size_t i : by_id(attached)) {
    const AttachedUser& u = attached[i];
    if (!u.lrn_priority || u.backlog_bits <= 0.0) {
      continue;
    }
    double need = u.backlog_bits;
    for (int p = next; p < n_prb && need > 0.0; ++p) {
      if (is_muted(ctx, p) || alloc.owner[p] >= 0) {
        continue;
      }
      const double rate = u.prb_rate_bps[prb_third(p, n_prb)];
      if (rate <= 0.0) {
        continue;
      }
      alloc.owner[p] = u.id;
      alloc.lrn_priority[p] = true;
      need -= rate * ctx.tti_s;
      next = p + 1;
    }
  }
  return alloc;
}

PrbAllocation schedule_tti(const SectorTti& ctx, std::span<const AttachedUser> attached, SchedulerState& state) {
  const int n_prb = n_prb_of(ctx);
  const bool abs_now = ctx.abs != nullptr && ctx.abs->enabled() && ctx.abs->is_abs(ctx.subframe);
  const bool aggressor_abs = abs_now && ctx.kind == NodeKind::PSN;

  PrbAllocation alloc(n_prb);
  const std::vector<std::size_t> order = by_id(attached);
  std::vector<double> need(attached.size(), 0.0);
  std::vector<double> scheduled_bits(attached.size(), 0.0);

  if (!(aggressor_abs && ctx.abs->power_scale == 0.0)) {
    alloc = allocate_priority(ctx, attached);
    for (std::size_t i = 0; i < attached.size(); ++i) {
      need[i] = attached[i].backlog_bits;
    }
    for (int p = 0; p < n_prb; ++p) {
      if (alloc.owner[p] < 0) {
        continue;
      }
      for (std::size_t i = 0; i < attached.size(); ++i) {
        if (attached[i].id == alloc.owner[p]) {
          const double bits = attached[i].prb_rate_bps[prb_third(p, n_prb)] * ctx.tti_s;
          need[i] -= bits;
          scheduled_bits[i] += bits;
        }
      }
    }

    // Local indices (in id order) are the PF candidate ids.
    std::vector<double> inst(attached.size(), 0.0);
    std::vector<double> avg(attached.size(), 0.0);
    for (std::size_t k = 0; k < order.size(); ++k) {
      avg[k] = state.avg_rate_bps[static_cast<std::size_t>(attached[order[k]].id)];
    }
    std::vector<int> candidates;
    candidates.reserve(attached.size());
    for (int p = 0; p < n_prb; ++p) {
      if (alloc.owner[p] >= 0 || is_muted(ctx, p)) {
        continue;
      }
      const int third = prb_third(p, n_prb);
      candidates.clear();
      for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        const AttachedUser& u = attached[i];
        if (u.lrn_priority || need[i] <= 0.0 || u.prb_rate_bps[third] <= 0.0) {
          continue;
        }
        if (aggressor_abs && !u.centre) {
          continue;
        }
        if (ctx.kind != NodeKind::PSN && u.edge && !abs_now) {
          continue;
        }
        if (u.icic_third >= 0 && u.icic_third != third) {
          continue;
        }
        inst[k] = u.prb_rate_bps[third];
        candidates.push_back(static_cast<int>(k));
      }
      const std::optional<int> winner = pf_select(candidates, inst, avg);
      if (!winner) {
        continue;
      }
      const std::size_t i = order[static_cast<std::size_t>(*winner)];
      alloc.owner[p] = attached[i].id;
      const double bits = attached[i].prb_rate_bps[third] * ctx.tti_s;
      need[i] -= bits;
      scheduled_bits[i] += bits;
    }
  }

  for (std::size_t i = 0; i < attached.size(); ++i) {
    const double bits = std::min(scheduled_bits[i], attached[i].backlog_bits);
    state.update(attached[i].id, bits / ctx.tti_s);
  }
  return alloc;
}

int cre_attach_bias(std::span<const AttachCandidate> candidates, double bias_db, bool sharing) {
  int best = -1;
  double best_metric = 0.0;
  for (const AttachCandidate& c : candidates) {
    if (!sharing && c.kind != NodeKind::PSN) {
      continue;
    }
    const double metric = c.rx_dbm + (sharing && c.kind != NodeKind::PSN ? bias_db : 0.0);
    if (best < 0 || metric > best_metric || (metric == best_metric && c.sector < best)) {
      best = c.sector;
      best_metric = metric;
    }
  }
  if (best < 0) {
    throw std::invalid_argument("cre_attach_bias: no eligible candidate sector");
  }
  return best;
}

std::vector<PairClass> default_comp_pairs() {
  return {{NodeKind::PSN, NodeKind::LRN},
          {NodeKind::PSN, NodeKind::PSN},
          {NodeKind::PSN, NodeKind::UAV},
          {NodeKind::UAV, NodeKind::UAV},
          {NodeKind::LRN, NodeKind::LRN}};
}

bool pair_allowed(NodeKind a, NodeKind b, std::span<const PairClass> pairs) {
  return std::any_of(pairs.begin(), pairs.end(), [&](const PairClass& p) {
    return (p.first == a && p.second == b) || (p.first == b && p.second == a);
  });
}

CompAgreement comp_mute(const PrbAllocation& victim_schedule, int victim, NodeKind victim_kind, int aggressor,
                        NodeKind aggressor_kind, std::span<const PairClass> pairs) {
  if (!pair_allowed(victim_kind, aggressor_kind, pairs)) {
    throw CompPairError("CoMP pair " + to_string(aggressor_kind) + " aggressor / " + to_string(victim_kind) +
                        " victim is not a coordinating pair class");
  }
  if (victim == aggressor) {
    throw CompPairError("CoMP aggressor and victim must differ");
  }
  CompAgreement agreement{{victim, aggressor}, {}};
  for (int p = 0; p < victim_schedule.n_prb(); ++p) {
    if (victim_schedule.owner[p] >= 0 && victim_schedule.lrn_priority[p]) {
      agreement.muted_prbs.push_back(p);
    }
  }
  return agreement;
}

}  // namespace icsim
