#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "icsim/engine.hpp"

using namespace icsim;

namespace {

SimParams small_params() {
  SimParams p;
  p.n_psn_users = 40;
  return p;
}

ScenarioConfig short_run(ScenarioConfig s, int n_tti) {
  s.n_tti = n_tti;
  s.n_drops = 1;
  return s;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST_CASE("rate map") {
  CHECK(rate_map(200.0, 1, 180e3) == doctest::Approx(180e3 * 5.55));
  CHECK(rate_map(20.0, 0, 180e3) == 0.0);
  CHECK(rate_map(-10.5, 5, 180e3) == 0.0);
  const double sinr = 10.0 * std::log10(1e-9 / (1e-10 + 1e-12));
  CHECK(rate_map(sinr, 1, 180e3) == doctest::Approx(180e3 * std::log2(1.0 + std::pow(10.0, sinr / 10.0))));
  CHECK(rate_map(9.96, 1, 180e3) == doctest::Approx(620e3).epsilon(0.005));
  CHECK(rate_map(5.0, 10, 180e3) == doctest::Approx(10 * rate_map(5.0, 1, 180e3)));
  CHECK_THROWS_AS(rate_map(5.0, -1, 180e3), std::invalid_argument);
}

TEST_CASE("per-PRB power splits the carrier") {
  BSNode s;
  s.tx_power_dbm = 46.0;
  CHECK(prb_power_dbm(s, 50) == doctest::Approx(46.0 - 10.0 * std::log10(50.0)));
  CHECK(prb_power_dbm(s, 1) == 46.0);
}

TEST_CASE("drops") {
  const SimParams p = small_params();
  const Drop a = make_drop(p, drop_seed(1, 0), 100);
  const Drop b = make_drop(p, drop_seed(1, 0), 100);
  CHECK(a.layout.users.size() == b.layout.users.size());
  CHECK(a.layout.count_users(UserKind::PsnMu) == 40);
  CHECK(a.channel.shadowing() == b.channel.shadowing());
  CHECK(drop_seed(1, 0) != drop_seed(1, 1));
  CHECK(drop_seed(1, 0) != drop_seed(2, 0));
  CHECK(a.profiles.size() == a.layout.users.size());
}

TEST_CASE("received power matrices") {
  const SimParams p = small_params();
  const Drop d = make_drop(p, drop_seed(3, 0), 10);
  const Eigen::MatrixXd rx = received_dbm(d.layout, d.channel, 50);
  const Eigen::MatrixXd rsrp = long_term_rsrp_dbm(d.layout, d.channel, 50);
  CHECK(rx.rows() == d.channel.users());
  CHECK(rx.cols() == d.channel.sectors());
  for (int u = 0; u < d.channel.users(); ++u) {
    for (int s = 0; s < d.channel.sectors(); ++s) {
      CHECK(rx(u, s) == doctest::Approx(prb_power_dbm(d.layout.sectors[s], 50) + d.channel.gain(u, s).total));
      CHECK(rx(u, s) - rsrp(u, s) == doctest::Approx(-d.channel.gain(u, s).fading));
    }
  }
}

TEST_CASE("association respects candidate sets") {
  const SimParams p = small_params();
  const Drop d = make_drop(p, drop_seed(4, 0), 10);
  const auto s1 = initial_association(d, p, situation1(), nullptr);
  const auto s2 = initial_association(d, p, situation2(), nullptr);
  for (const UserNode& u : d.layout.users) {
    const NodeKind k1 = d.layout.sectors[s1[u.id]].kind;
    const NodeKind k2 = d.layout.sectors[s2[u.id]].kind;
    if (u.kind == UserKind::LrnUser) {
      CHECK(k1 == NodeKind::LRN);
      CHECK(k2 == NodeKind::LRN);
    } else {
      CHECK(k1 == NodeKind::PSN);
    }
  }
}

TEST_CASE("association tiles") {
  const SimParams p = small_params();
  const Drop d = make_drop(p, drop_seed(5, 0), 10);
  const std::vector<int> users{0, 1, 2};
  const Tile t = build_tile(d, p, situation3(), users);
  CHECK(t.instance.users() == 4);
  CHECK(t.instance.sectors() == 3);
  CHECK(t.sector_ids.size() == 3);
  CHECK(t.instance.live == std::vector<bool>{true, true, true, false});
  CHECK(t.instance.live_users() == 3);
  for (int u = 0; u < 4; ++u) {
    CHECK(t.instance.allowed.row(u).any());
  }
  // Columns ranked by summed effective rate.
  std::vector<double> col(3, 0.0);
  for (int u = 0; u < 3; ++u) {
    const auto r = effective_rates(d, p, situation3(), users[u]);
    for (int c = 0; c < 3; ++c) {
      CHECK(t.instance.rate_bps(u, c) == doctest::Approx(r[t.sector_ids[c]]));
      col[c] += r[t.sector_ids[c]];
    }
  }
  CHECK(col[0] >= col[1]);
  CHECK(col[1] >= col[2]);
}

TEST_CASE("training set sampling") {
  SimParams p = small_params();
  const auto a = sample_training_set(p, situation3(), 30, 7, 1, 4);
  const auto b = sample_training_set(p, situation3(), 30, 7, 1, 4);
  REQUIRE(a.size() == 30);
  bool saw_small = false;
  bool saw_full = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int live = a[i].instance.live_users();
    CHECK(live >= 1);
    CHECK(live <= 4);
    saw_small = saw_small || live < 4;
    saw_full = saw_full || live == 4;
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].instance.rate_bps == b[i].instance.rate_bps);
    const OracleResult o = oracle_assign(a[i].instance, a[i].bounds);
    CHECK(o.choice == a[i].label);
  }
  CHECK(saw_small);
  CHECK(saw_full);
  CHECK(sample_training_set(p, situation3(), 0, 7, 1, 4).empty());
  p.tile.users = 9;
  CHECK_THROWS_AS(sample_training_set(p, situation3(), 1, 7, 1, 4), OracleSizeError);
}

TEST_CASE("zero TTIs give an empty fragment") {
  const SimParams p = small_params();
  const Drop d = make_drop(p, drop_seed(1, 0), 1);
  const DropFragment f = run_drop(d, short_run(situation2(), 0), p, nullptr);
  CHECK(f.throughput_bps.empty());
  CHECK(f.sinr_db.empty());
  CHECK(f.audit.ttis == 0);
}

TEST_CASE("drops are deterministic and conserve bits") {
  const SimParams p = small_params();
  const ScenarioConfig sc = short_run(situation3(), 300);
  const Drop d = make_drop(p, drop_seed(2, 0), 300);
  const DropFragment a = run_drop(d, sc, p, nullptr);
  const DropFragment b = run_drop(make_drop(p, drop_seed(2, 0), 300), sc, p, nullptr);
  CHECK(a.throughput_bps == b.throughput_bps);
  CHECK(a.sinr_db == b.sinr_db);
  CHECK(a.interference_dbm == b.interference_dbm);
  CHECK(a.serving == b.serving);
  CHECK(a.throughput_bps.size() == 40);
  CHECK(a.audit.ttis == 300);
  CHECK(a.audit.served_bits <= a.audit.arrived_bits);
  CHECK(a.audit.served_bits > 0.0);
  CHECK(a.audit.muted_violations == 0);
  CHECK(a.audit.lrn_priority_violations == 0);
  CHECK(a.audit.overbooked_prbs == 0);
  for (double v : a.throughput_bps) {
    CHECK(v >= 0.0);
  }
}

TEST_CASE("sharing raises PSN throughput on a paired seed") {
  SimParams p = small_params();
  p.n_psn_users = 120;
  const Drop d = make_drop(p, drop_seed(1, 0), 1000);
  const DropFragment s1 = run_drop(d, short_run(situation1(), 1000), p, nullptr);
  const DropFragment s2 = run_drop(d, short_run(situation2(), 1000), p, nullptr);
  CHECK(mean(s2.throughput_bps) > mean(s1.throughput_bps));
}

TEST_CASE("empirical CDF and quantiles") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.0, 5.0);
  std::vector<double> x(101);
  for (double& v : x) {
    v = z(rng);
  }
  const auto cdf = empirical_cdf(x);
  REQUIRE(cdf.size() == x.size());
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    CHECK(cdf[i].value >= cdf[i - 1].value);
    CHECK(cdf[i].cdf > cdf[i - 1].cdf);
  }
  CHECK(cdf.back().cdf == 1.0);

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  CHECK(quantile(x, 0.0) == sorted.front());
  CHECK(quantile(x, 1.0) == sorted.back());
  CHECK(quantile(x, 0.5) == sorted[50]);
  CHECK(quantile(x, 0.05) == doctest::Approx(sorted[5]));
  CHECK(quantile({1.0, 3.0}, 0.25) == doctest::Approx(1.5));

  const std::vector<double> one{-75.0};
  const auto step = interference_cdf(one);
  REQUIRE(step.size() == 1);
  CHECK(step[0].value == -75.0);
  CHECK(step[0].cdf == 1.0);
  CHECK_THROWS(interference_cdf(std::vector<double>{}));
}

TEST_CASE("outage curve") {
  const std::vector<double> thresholds{0.0, 20.0};
  const std::vector<double> flat(10, 10.0);
  const auto o = outage_curve(flat, thresholds);
  CHECK(o[0] == std::pair<double, double>{0.0, 0.0});
  CHECK(o[1] == std::pair<double, double>{20.0, 1.0});

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-15.0, 25.0);
  std::vector<double> mixed(997);
  for (double& v : mixed) {
    v = std::round(u(rng));  // integer values hit thresholds exactly
  }
  std::vector<double> grid;
  for (int t = -10; t <= 20; ++t) {
    grid.push_back(t);
  }
  const auto curve = outage_curve(mixed, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto below = std::count_if(mixed.begin(), mixed.end(), [&](double v) { return v < grid[i]; });
    CHECK(curve[i].second == static_cast<double>(below) / mixed.size());
  }
  CHECK_THROWS(outage_curve(std::vector<double>{}, thresholds));
}

TEST_CASE("scenario runner merges in order") {
  SimParams p = small_params();
  std::vector<ScenarioConfig> sc{short_run(situation1(), 50), short_run(situation2(), 50)};
  sc[0].seeds = {1, 2};
  sc[1].seeds = {1, 2};
  sc[0].n_drops = sc[1].n_drops = 2;
  const auto single = run_scenarios(p, sc, nullptr, 1);
  const auto multi = run_scenarios(p, sc, nullptr, 3);
  REQUIRE(single.size() == 2);
  CHECK(single[0].scenario_label == "no_sharing");
  CHECK(single[0].drops == 4);
  CHECK(single[0].throughput_samples.size() == 160);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(single[i].throughput_samples == multi[i].throughput_samples);
    CHECK(single[i].sinr_samples == multi[i].sinr_samples);
  }
  // The first drop's fragment leads the merged samples.
  const Drop d = make_drop(p, drop_seed(1, 0), 50);
  const DropFragment f = run_drop(d, sc[0], p, nullptr);
  CHECK(std::equal(f.throughput_bps.begin(), f.throughput_bps.end(), single[0].throughput_samples.begin()));

  ScenarioConfig dl = short_run(situation4(), 10);
  CHECK_THROWS(run_scenarios(p, {dl}, nullptr, 1));
}
