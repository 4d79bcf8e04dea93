#include "icsim/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "icsim/rng.hpp"

namespace icsim {

double rate_map(double sinr_db, int n_prb, double prb_bandwidth_hz) {
  if (n_prb < 0) {
    throw std::invalid_argument("rate_map: n_prb must be non-negative");
  }
  if (n_prb == 0 || !(sinr_db >= kRateFloorSinrDb)) {
    return 0.0;
  }
  const double se = std::min(std::log2(1.0 + std::pow(10.0, sinr_db / 10.0)), kSpectralEfficiencyCap);
  return n_prb * prb_bandwidth_hz * se;
}

void SimParams::validate() const {
  layout.validate();
  channel.validate();
  traffic.validate();
  scheduler.validate();
  if (n_psn_users < 1) {
    throw std::invalid_argument("n_psn_users must be >= 1");
  }
  if (tile.users < 1 || tile.sectors < 1) {
    throw std::invalid_argument("association tile must have at least one user and one sector");
  }
}

std::uint64_t drop_seed(std::uint64_t seed, int drop) {
  return derive_seed(seed, {0x64726f70, static_cast<std::uint64_t>(drop)});
}

Drop make_drop(const SimParams& params, std::uint64_t seed, int horizon_subframes) {
  NetworkLayout layout = build_default_layout(derive_seed(seed, {1}), params.n_psn_users, params.layout);
  ChannelRealization channel(layout, params.channel, derive_seed(seed, {2}), std::max(horizon_subframes, 1));
  std::vector<TrafficProfile> profiles =
      assign_profiles(layout.users, params.traffic.voip_fraction, derive_seed(seed, {3}), params.traffic);
  return Drop{std::move(layout), std::move(channel), std::move(profiles), seed};
}

double prb_power_dbm(const BSNode& sector, int n_prb) {
  return sector.tx_power_dbm - 10.0 * std::log10(static_cast<double>(n_prb));
}

Eigen::MatrixXd received_dbm(const NetworkLayout& layout, const ChannelRealization& channel, int n_prb) {
  Eigen::MatrixXd rx(channel.users(), channel.sectors());
  for (int u = 0; u < channel.users(); ++u) {
    for (int s = 0; s < channel.sectors(); ++s) {
      rx(u, s) = prb_power_dbm(layout.sectors[s], n_prb) + channel.gain(u, s).total;
    }
  }
  return rx;
}

Eigen::MatrixXd long_term_rsrp_dbm(const NetworkLayout& layout, const ChannelRealization& channel, int n_prb) {
  Eigen::MatrixXd rx(channel.users(), channel.sectors());
  for (int u = 0; u < channel.users(); ++u) {
    for (int s = 0; s < channel.sectors(); ++s) {
      rx(u, s) = prb_power_dbm(layout.sectors[s], n_prb) + channel.long_term_gain_db(u, s);
    }
  }
  return rx;
}

namespace {

constexpr int kThirds = 3;
constexpr double kTtiS = 1e-3;

AbsPattern scenario_abs(const ScenarioConfig& sc, const SchedulerConfig& cfg) {
  if (!sc.abs_active()) {
    return AbsPattern::none();
  }
  return AbsPattern::evenly_spaced(cfg.abs_subframes, sc.icic_mode == IcicMode::Eicic ? 0.0 : cfg.feicic_power_scale);
}

double best_of_kind(const Eigen::MatrixXd& rsrp, const NetworkLayout& layout, int user, bool psn, int skip = -1) {
  double best = -std::numeric_limits<double>::infinity();
  for (const BSNode& n : layout.sectors) {
    if ((n.kind == NodeKind::PSN) == psn && n.id != skip) {
      best = std::max(best, rsrp(user, n.id));
    }
  }
  return best;
}

// Victim-cell user that only gets protected (ABS) subframes.
bool protected_edge(const Eigen::MatrixXd& rsrp, const NetworkLayout& layout, int user, int sector,
                    const ScenarioConfig& sc, const SchedulerConfig& cfg) {
  return sc.abs_active() && layout.sectors[sector].kind != NodeKind::PSN &&
         rsrp(user, sector) - best_of_kind(rsrp, layout, user, true) < cfg.edge_margin_db;
}

std::vector<double> effective_rates_from(const Drop& drop, const Eigen::MatrixXd& rsrp, const SimParams& params,
                                         const ScenarioConfig& sc, int user) {
  const NetworkLayout& layout = drop.layout;
  const int n_sectors = drop.channel.sectors();
  const double noise_mw = dbm_to_mw(params.channel.noise_per_prb_dbm());
  const double abs_scale = scenario_abs(sc, params.scheduler).power_scale;
  std::vector<double> rx(static_cast<std::size_t>(n_sectors));
  double total = 0.0;
  double total_protected = 0.0;
  for (int s = 0; s < n_sectors; ++s) {
    rx[s] = dbm_to_mw(prb_power_dbm(layout.sectors[s], params.channel.n_prb) + drop.channel.gain(user, s).total);
    total += rx[s];
    total_protected += layout.sectors[s].kind == NodeKind::PSN ? abs_scale * rx[s] : rx[s];
  }
  std::vector<double> rates(static_cast<std::size_t>(n_sectors));
  for (int s = 0; s < n_sectors; ++s) {
    const bool prot = protected_edge(rsrp, layout, user, s, sc, params.scheduler);
    const double interference = (prot ? total_protected : total) - rx[s];
    const double sinr = mw_to_dbm(rx[s]) - mw_to_dbm(std::max(interference, 0.0) + noise_mw);
    rates[s] = rate_map(sinr, params.channel.n_prb, params.channel.prb_bandwidth_hz);
  }
  return rates;
}

Tile build_tile_from(const Drop& drop, const Eigen::MatrixXd& rsrp, const Eigen::MatrixXd& rx_dbm,
                     const SimParams& params, const ScenarioConfig& sc, std::span<const int> users) {
  const TileShape shape = params.tile;
  if (users.empty() || static_cast<int>(users.size()) > shape.users) {
    throw std::invalid_argument("build_tile: user count must be in [1, " + std::to_string(shape.users) + "]");
  }
  const NetworkLayout& layout = drop.layout;
  const std::vector<int> candidates = candidate_set(layout.users[users.front()], sc, layout);

  std::vector<std::vector<double>> rates;
  std::vector<double> score(static_cast<std::size_t>(drop.channel.sectors()), 0.0);
  for (int u : users) {
    rates.push_back(effective_rates_from(drop, rsrp, params, sc, u));
    for (int s : candidates) {
      score[s] += rates.back()[s];
    }
  }
  std::vector<int> ranked = candidates;
  std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) { return score[a] > score[b]; });
  ranked.resize(std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(shape.sectors)));

  Tile tile;
  tile.sector_ids = ranked;
  AssocInstance& in = tile.instance;
  in.rate_bps = Eigen::MatrixXd::Zero(shape.users, shape.sectors);
  in.rx_dbm = Eigen::MatrixXd::Constant(shape.users, shape.sectors, -200.0);
  in.allowed = CandidateMask::Constant(shape.users, shape.sectors, false);
  in.live.assign(static_cast<std::size_t>(shape.users), false);
  in.qos.assign(static_cast<std::size_t>(shape.users), TrafficKind::Voip);
  tile.bounds.alpha_min_bps.assign(static_cast<std::size_t>(shape.users), 0.0);
  for (int c = 0; c < shape.sectors; ++c) {
    const bool real = c < static_cast<int>(ranked.size());
    const double p = real ? layout.sectors[ranked[c]].tx_power_dbm : 0.0;
    in.sector_power_dbm.push_back(p);
    tile.bounds.psi_max_dbm.push_back(p + params.psi_max_offset_db);
  }
  for (int r = 0; r < shape.users; ++r) {
    const bool live = r < static_cast<int>(users.size());
    for (int c = 0; c < static_cast<int>(ranked.size()); ++c) {
      in.allowed(r, c) = true;
      if (live) {
        in.rate_bps(r, c) = rates[r][ranked[c]];
        in.rx_dbm(r, c) = rx_dbm(users[r], ranked[c]);
      }
    }
    if (live) {
      in.live[r] = true;
      in.qos[r] = drop.profiles[users[r]].kind;
      tile.bounds.alpha_min_bps[r] = drop.profiles[users[r]].offered_bps();
    }
  }
  return tile;
}

}  // namespace

std::vector<double> effective_rates(const Drop& drop, const SimParams& params, const ScenarioConfig& scenario,
                                    int user) {
  return effective_rates_from(drop, long_term_rsrp_dbm(drop.layout, drop.channel, params.channel.n_prb), params, scenario, user);
}

Tile build_tile(const Drop& drop, const SimParams& params, const ScenarioConfig& scenario, std::span<const int> users) {
  return build_tile_from(drop, long_term_rsrp_dbm(drop.layout, drop.channel, params.channel.n_prb), received_dbm(drop.layout, drop.channel, params.channel.n_prb),
                         params, scenario, users);
}

std::vector<TrainingSample> sample_training_set(const SimParams& params, const ScenarioConfig& scenario, int n_samples,
                                                std::uint64_t seed, int min_live, int max_live) {
  if (params.tile.users > kOracleMaxUsers || params.tile.sectors > kOracleMaxSectors) {
    throw OracleSizeError("tile of " + std::to_string(params.tile.users) + " users x " +
                          std::to_string(params.tile.sectors) + " sectors exceeds the oracle limit of " +
                          std::to_string(kOracleMaxUsers) + " x " + std::to_string(kOracleMaxSectors));
  }
  if (min_live < 1 || max_live < min_live || max_live > params.tile.users) {
    throw std::invalid_argument("live users per tile must satisfy 1 <= min <= max <= tile users");
  }
  constexpr int kTilesPerDrop = 40;
  std::vector<TrainingSample> out;
  out.reserve(static_cast<std::size_t>(std::max(n_samples, 0)));
  for (int d = 0; static_cast<int>(out.size()) < n_samples; ++d) {
    const Drop drop = make_drop(params, drop_seed(derive_seed(seed, {0x7469}), d), 1);
    const Eigen::MatrixXd rsrp = long_term_rsrp_dbm(drop.layout, drop.channel, params.channel.n_prb);
    const Eigen::MatrixXd rx = received_dbm(drop.layout, drop.channel, params.channel.n_prb);
    std::vector<int> psn;
    for (const UserNode& u : drop.layout.users) {
      if (u.kind == UserKind::PsnMu) {
        psn.push_back(u.id);
      }
    }
    std::mt19937_64 rng(derive_seed(seed, {0x6473, static_cast<std::uint64_t>(d)}));
    std::uniform_int_distribution<std::size_t> pick(0, psn.size() - 1);
    std::uniform_int_distribution<int> live(min_live, std::min<int>(max_live, static_cast<int>(psn.size())));
    for (int k = 0; k < kTilesPerDrop && static_cast<int>(out.size()) < n_samples; ++k) {
      const int anchor = psn[pick(rng)];
      const int n_live = live(rng);
      std::vector<int> others;
      for (int u : psn) {
        if (u != anchor) {
          others.push_back(u);
        }
      }
      const Vec2 a = drop.layout.users[anchor].position;
      std::stable_sort(others.begin(), others.end(), [&](int x, int y) {
        return norm(drop.layout.users[x].position - a) < norm(drop.layout.users[y].position - a);
      });
      std::vector<int> members{anchor};
      members.insert(members.end(), others.begin(), others.begin() + (n_live - 1));
      Tile tile = build_tile_from(drop, rsrp, rx, params, scenario, members);
      out.push_back(label_instance(std::move(tile.instance), std::move(tile.bounds)));
    }
  }
  return out;
}

std::vector<int> initial_association(const Drop& drop, const SimParams& params, const ScenarioConfig& scenario,
                                     const MLPModel* model) {
  const NetworkLayout& layout = drop.layout;
  const Eigen::MatrixXd rsrp = long_term_rsrp_dbm(layout, drop.channel, params.channel.n_prb);
  const bool use_model = scenario.dl_assoc;
  if (use_model && model == nullptr) {
    throw ModelError("scenario " + scenario.label + " needs a trained association model");
  }
  if (use_model && (model->users != params.tile.users || model->sectors != params.tile.sectors)) {
    throw ModelError("model output " + std::to_string(model->users) + "x" + std::to_string(model->sectors) +
                     " does not match the association tile " + std::to_string(params.tile.users) + "x" +
                     std::to_string(params.tile.sectors));
  }
  const Eigen::MatrixXd rx = use_model ? received_dbm(layout, drop.channel, params.channel.n_prb) : Eigen::MatrixXd();
  std::vector<int> serving(layout.users.size(), -1);
  for (const UserNode& u : layout.users) {
    if (use_model && u.kind == UserKind::PsnMu) {
      const std::array<int, 1> members{u.id};
      const Tile tile = build_tile_from(drop, rsrp, rx, params, scenario, members);
      const AssignmentMatrix soft = forward(*model, encode_features(tile.instance), tile.instance.allowed);
      const int column = harden(soft, tile.instance.allowed).choices().front();
      serving[u.id] = tile.sector_ids[column];
      continue;
    }
    std::vector<AttachCandidate> cands;
    for (int s : candidate_set(u, scenario, layout)) {
      cands.push_back({s, layout.sectors[s].kind, rsrp(u.id, s)});
    }
    const bool sharing = u.kind == UserKind::LrnUser || scenario.rac_sharing;
    const double bias = scenario.cre && u.kind == UserKind::PsnMu ? params.scheduler.cre_bias_db : 0.0;
    serving[u.id] = cre_attach_bias(cands, bias, sharing);
  }
  return serving;
}

void DropAudit::merge(const DropAudit& o) {
  muted_checks += o.muted_checks;
  muted_violations += o.muted_violations;
  lrn_backlog_events += o.lrn_backlog_events;
  lrn_priority_violations += o.lrn_priority_violations;
  overbooked_prbs += o.overbooked_prbs;
  arrived_bits += o.arrived_bits;
  served_bits += o.served_bits;
  ttis += o.ttis;
}

namespace {

struct UserAccumulator {
  double served_bits = 0.0;
  double occupied_prb_tti = 0.0;
  double sinr_sum = 0.0;
  int sinr_n = 0;
  double intf_sum_mw = 0.0;
  double wideband_sinr_sum = 0.0;
  double wideband_intf_sum_mw = 0.0;
  int wideband_n = 0;
  // Current TTI.
  double cap_bits = 0.0;
  int n_prb = 0;
  double tti_sinr_sum = 0.0;
  double tti_intf_sum = 0.0;
};

}  // namespace

DropFragment run_drop(const Drop& drop, const ScenarioConfig& sc, const SimParams& params, const MLPModel* model) {
  DropFragment out;
  if (sc.n_tti <= 0) {
    return out;
  }
  NetworkLayout layout = drop.layout;
  ChannelRealization channel = drop.channel;
  const int n_users = channel.users();
  const int n_sectors = channel.sectors();
  const int n_prb = params.channel.n_prb;
  const double prb_bw = params.channel.prb_bandwidth_hz;
  const double noise_mw = dbm_to_mw(params.channel.noise_per_prb_dbm());
  const SchedulerConfig& cfg = params.scheduler;
  const AbsPattern abs = scenario_abs(sc, cfg);
  const std::vector<PairClass> pairs = default_comp_pairs();

  std::vector<int> serving = initial_association(drop, params, sc, model);
  Eigen::MatrixXd rsrp = long_term_rsrp_dbm(layout, channel, n_prb);
  Eigen::MatrixXd rx(n_users, n_sectors);  // linear mW at nominal power
  auto refresh_user = [&](int u) {
    for (int s = 0; s < n_sectors; ++s) {
      rx(u, s) = dbm_to_mw(prb_power_dbm(layout.sectors[s], n_prb) + channel.gain(u, s).total);
      rsrp(u, s) = prb_power_dbm(layout.sectors[s], n_prb) + channel.long_term_gain_db(u, s);
    }
  };
  for (int u = 0; u < n_users; ++u) {
    refresh_user(u);
  }

  // Static per-drop scheduling flags of PSN MUs.
  std::vector<AttachedUser> flags(static_cast<std::size_t>(n_users));
  for (const UserNode& u : layout.users) {
    AttachedUser& f = flags[u.id];
    f.id = u.id;
    f.lrn_priority = u.kind == UserKind::LrnUser;
    if (f.lrn_priority) {
      continue;
    }
    const int s = serving[u.id];
    const BSNode& node = layout.sectors[s];
    if (node.kind == NodeKind::PSN) {
      const double victim_best = best_of_kind(rsrp, layout, u.id, false);
      f.centre = rsrp(u.id, s) - victim_best >= cfg.edge_margin_db;
      if (sc.icic_mode == IcicMode::Icic &&
          rsrp(u.id, s) - best_of_kind(rsrp, layout, u.id, true, s) < cfg.icic_edge_margin_db) {
        f.icic_third = node.sector_index % kThirds;
      }
    } else {
      f.edge = protected_edge(rsrp, layout, u.id, s, sc, cfg);
    }
  }

  std::vector<QueueState> queues(static_cast<std::size_t>(n_users));
  {
    std::mt19937_64 rng(derive_seed(drop.seed, {4}));
    for (int u = 0; u < n_users; ++u) {
      std::uniform_real_distribution<double> phase(0.0, drop.profiles[u].inter_arrival_ms);
      queues[u].phase_ms = std::floor(phase(rng));
    }
  }

  SchedulerState state(n_users, cfg.ewma_horizon_tti, cfg.avg_rate_init_bps);
  std::vector<UserAccumulator> acc(static_cast<std::size_t>(n_users));
  std::vector<std::array<double, kThirds>> scale(static_cast<std::size_t>(n_sectors));
  std::vector<std::array<double, kThirds>> interference(static_cast<std::size_t>(n_users));
  std::vector<std::vector<AttachedUser>> attached(static_cast<std::size_t>(n_sectors));
  std::vector<std::vector<bool>> muted(static_cast<std::size_t>(n_sectors), std::vector<bool>(n_prb, false));
  std::vector<std::vector<bool>> reserved(static_cast<std::size_t>(n_sectors), std::vector<bool>(n_prb, false));
  std::vector<std::vector<int>> muted_on(static_cast<std::size_t>(n_prb));
  std::vector<PrbAllocation> alloc(static_cast<std::size_t>(n_sectors));

  std::vector<int> lrn_users;
  for (const UserNode& u : layout.users) {
    if (u.kind == UserKind::LrnUser) {
      lrn_users.push_back(u.id);
    }
  }

  for (int t = 0; t < sc.n_tti; ++t) {
    if (t > 0) {
      layout = advance_users(std::move(layout), kTtiS);
      for (int u : lrn_users) {
        channel.update_user(layout.users[u], layout, t);
        refresh_user(u);
      }
    }
    for (int u : lrn_users) {
      std::vector<AttachCandidate> cands;
      for (const BSNode& n : layout.sectors) {
        if (n.kind == NodeKind::LRN) {
          cands.push_back({n.id, n.kind, rsrp(u, n.id)});
        }
      }
      serving[u] = cre_attach_bias(cands, 0.0, true);
    }
    for (int u = 0; u < n_users; ++u) {
      queues[u] = step_arrivals(queues[u], drop.profiles[u], kTtiS * 1e3);
    }

    // Data power factor of each sector in each PRB third.
    const bool abs_now = abs.enabled() && abs.is_abs(t);
    for (const BSNode& n : layout.sectors) {
      for (int k = 0; k < kThirds; ++k) {
        double f = 1.0;
        if (n.kind == NodeKind::PSN) {
          if (abs_now) {
            f *= abs.power_scale;
          }
          if (sc.icic_mode == IcicMode::Icic && k != n.sector_index % kThirds) {
            f *= cfg.icic_power_scale;
          }
        }
        scale[n.id][k] = f;
      }
    }

    for (auto& a : attached) {
      a.clear();
    }
    for (int u = 0; u < n_users; ++u) {
      const int s = serving[u];
      AttachedUser au = flags[u];
      au.backlog_bits = queues[u].backlog_bytes * 8.0;
      for (int k = 0; k < kThirds; ++k) {
        double total = 0.0;
        for (int j = 0; j < n_sectors; ++j) {
          total += rx(u, j) * scale[j][k];
        }
        const double signal = rx(u, s) * scale[s][k];
        interference[u][k] = std::max(total - signal, 0.0);
        au.prb_rate_bps[k] =
            signal > 0.0 ? rate_map(mw_to_dbm(signal) - mw_to_dbm(interference[u][k] + noise_mw), 1, prb_bw) : 0.0;
      }
      attached[s].push_back(au);

      if (layout.users[u].kind == UserKind::PsnMu) {
        double sum_db = 0.0;
        double sum_i = 0.0;
        int n = 0;
        for (int k = 0; k < kThirds; ++k) {
          const double signal = rx(u, s) * scale[s][k];
          if (signal > 0.0) {
            sum_db += mw_to_dbm(signal) - mw_to_dbm(interference[u][k] + noise_mw);
            sum_i += interference[u][k];
            ++n;
          }
        }
        if (n > 0) {
          acc[u].wideband_sinr_sum += sum_db / n;
          acc[u].wideband_intf_sum_mw += sum_i / n;
          ++acc[u].wideband_n;
        }
      }
    }

    // Phase A: protected LRN sectors reserve priority PRBs and publish mutes.
    if (sc.comp) {
      for (int s = 0; s < n_sectors; ++s) {
        std::fill(muted[s].begin(), muted[s].end(), false);
        std::fill(reserved[s].begin(), reserved[s].end(), false);
      }
      for (const BSNode& victim : layout.sectors) {
        if (victim.kind != NodeKind::LRN) {
          continue;
        }
        SectorTti ctx{victim.id, victim.kind, t, n_prb, nullptr, muted[victim.id], kTtiS};
        const PrbAllocation pri = allocate_priority(ctx, attached[victim.id]);
        if (pri.allocated() == 0) {
          continue;
        }
        for (int p = 0; p < n_prb; ++p) {
          if (pri.lrn_priority[p]) {
            reserved[victim.id][p] = true;
          }
        }
        std::vector<std::pair<double, int>> strength;
        for (const BSNode& agg : layout.sectors) {
          if (agg.id == victim.id || !pair_allowed(victim.kind, agg.kind, pairs)) {
            continue;
          }
          double w = 0.0;
          for (const AttachedUser& au : attached[victim.id]) {
            if (au.lrn_priority && au.backlog_bits > 0.0) {
              w += rx(au.id, agg.id) * (scale[agg.id][0] + scale[agg.id][1] + scale[agg.id][2]) / kThirds;
            }
          }
          if (w > 0.0) {
            strength.emplace_back(-w, agg.id);
          }
        }
        std::sort(strength.begin(), strength.end());
        const std::size_t n_mute = std::min(strength.size(), static_cast<std::size_t>(cfg.comp_cluster_size));
        for (std::size_t i = 0; i < n_mute; ++i) {
          const int a = strength[i].second;
          const CompAgreement ag = comp_mute(pri, victim.id, victim.kind, a, layout.sectors[a].kind, pairs);
          for (int p : ag.muted_prbs) {
            if (!reserved[a][p]) {
              muted[a][p] = true;
            }
          }
        }
      }
    }

    // Phase B: every sector schedules against the published mutes.
    for (const BSNode& n : layout.sectors) {
      SectorTti ctx{n.id, n.kind, t, n_prb, abs.enabled() ? &abs : nullptr,
                    sc.comp ? muted[n.id] : std::vector<bool>{}, kTtiS};
      alloc[n.id] = schedule_tti(ctx, attached[n.id], state);
    }

    for (int p = 0; p < n_prb; ++p) {
      muted_on[p].clear();
      if (sc.comp) {
        for (int s = 0; s < n_sectors; ++s) {
          if (muted[s][p]) {
            muted_on[p].push_back(s);
          }
        }
      }
    }

    // LRN priority audit.
    for (const BSNode& n : layout.sectors) {
      const PrbAllocation& a = alloc[n.id];
      for (const AttachedUser& au : attached[n.id]) {
        if (!au.lrn_priority || au.backlog_bits <= 0.0) {
          continue;
        }
        ++out.audit.lrn_backlog_events;
        int last_own = -1;
        for (int p = 0; p < n_prb; ++p) {
          if (a.owner[p] == au.id) {
            last_own = p;
          }
        }
        bool violated = false;
        for (int p = 0; p < n_prb; ++p) {
          const int o = a.owner[p];
          if (o < 0 || flags[o].lrn_priority || au.prb_rate_bps[prb_third(p, n_prb)] <= 0.0) {
            continue;
          }
          if (last_own < 0 || p < last_own) {
            violated = true;
          }
        }
        out.audit.lrn_priority_violations += violated ? 1 : 0;
      }
    }

    // Link evaluation on allocated PRBs.
    for (const BSNode& n : layout.sectors) {
      const PrbAllocation& a = alloc[n.id];
      for (int p = 0; p < n_prb; ++p) {
        const int u = a.owner[p];
        if (u < 0) {
          continue;
        }
        if (sc.comp && muted[n.id][p]) {
          ++out.audit.overbooked_prbs;
        }
        const int k = prb_third(p, n_prb);
        double intf = interference[u][k];
        double restored = 0.0;
        for (int m : muted_on[p]) {
          if (m != n.id) {
            intf -= rx(u, m) * scale[m][k];
            restored += rx(u, m);
          }
        }
        if (abs_now) {
          for (const BSNode& agg : layout.sectors) {
            if (agg.kind == NodeKind::PSN && agg.id != n.id &&
                !(sc.comp && muted[agg.id][p])) {
              restored += rx(u, agg.id) * (1.0 - scale[agg.id][k]);
            }
          }
        }
        intf = std::max(intf, 0.0);
        const double signal = rx(u, n.id) * scale[n.id][k];
        const double sinr = mw_to_dbm(signal) - mw_to_dbm(intf + noise_mw);
        if (restored > 0.0) {
          ++out.audit.muted_checks;
          const double sinr_full = mw_to_dbm(signal) - mw_to_dbm(intf + restored + noise_mw);
          if (sinr < sinr_full) {
            ++out.audit.muted_violations;
          }
        }
        UserAccumulator& ua = acc[u];
        ua.cap_bits += rate_map(sinr, 1, prb_bw) * kTtiS;
        ++ua.n_prb;
        ua.tti_sinr_sum += sinr;
        ua.tti_intf_sum += intf;
      }
    }

    for (int u = 0; u < n_users; ++u) {
      UserAccumulator& ua = acc[u];
      if (ua.n_prb == 0) {
        continue;
      }
      const double served = std::min(queues[u].backlog_bytes * 8.0, ua.cap_bits);
      queues[u] = drain(queues[u], served / 8.0);
      ua.served_bits += served;
      if (ua.cap_bits > 0.0) {
        ua.occupied_prb_tti += served / ua.cap_bits * ua.n_prb;
      }
      ua.sinr_sum += ua.tti_sinr_sum / ua.n_prb;
      ua.intf_sum_mw += ua.tti_intf_sum / ua.n_prb;
      ++ua.sinr_n;
      ua.cap_bits = 0.0;
      ua.n_prb = 0;
      ua.tti_sinr_sum = 0.0;
      ua.tti_intf_sum = 0.0;
    }
    ++out.audit.ttis;
  }

  for (const UserNode& u : layout.users) {
    out.audit.arrived_bits += queues[u.id].arrived_bytes * 8.0;
    out.audit.served_bits += acc[u.id].served_bits;
    if (u.kind != UserKind::PsnMu) {
      continue;
    }
    const UserAccumulator& ua = acc[u.id];
    const double occupied_s = ua.occupied_prb_tti * kTtiS / n_prb;
    out.throughput_bps.push_back(occupied_s > 0.0 ? ua.served_bits / occupied_s : 0.0);
    if (ua.sinr_n > 0) {
      out.sinr_db.push_back(ua.sinr_sum / ua.sinr_n);
      out.interference_dbm.push_back(mw_to_dbm(ua.intf_sum_mw / ua.sinr_n));
    } else if (ua.wideband_n > 0) {
      out.sinr_db.push_back(ua.wideband_sinr_sum / ua.wideband_n);
      out.interference_dbm.push_back(mw_to_dbm(ua.wideband_intf_sum_mw / ua.wideband_n));
    } else {
      throw std::runtime_error("user " + std::to_string(u.id) + " was never reachable by its serving sector");
    }
    out.serving.push_back(serving[u.id]);
  }
  return out;
}

}  // namespace icsim
