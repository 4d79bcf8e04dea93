#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "icsim/assoc.hpp"

using namespace icsim;

namespace {

AssocInstance make_instance(const Eigen::MatrixXd& rates) {
  AssocInstance inst;
  inst.rate_bps = rates;
  inst.rx_dbm = Eigen::MatrixXd::Constant(rates.rows(), rates.cols(), -80.0);
  inst.allowed = CandidateMask::Constant(rates.rows(), rates.cols(), true);
  inst.live.assign(static_cast<std::size_t>(rates.rows()), true);
  inst.qos.assign(static_cast<std::size_t>(rates.rows()), TrafficKind::Voip);
  inst.sector_power_dbm.assign(static_cast<std::size_t>(rates.cols()), 46.0);
  return inst;
}

FeasibilityBounds loose(const AssocInstance& inst) {
  return {std::vector<double>(static_cast<std::size_t>(inst.users()), 0.0),
          std::vector<double>(static_cast<std::size_t>(inst.sectors()), 100.0)};
}

struct Reference {
  double objective = 0.0;
  bool feasible = false;
};

// Independent recursive enumerator: rate floor, power ceiling, then fallbacks.
Reference reference_oracle(const AssocInstance& inst, const FeasibilityBounds& b) {
  const int n = inst.users();
  const int m = inst.sectors();
  const double none = -std::numeric_limits<double>::infinity();
  double best[3] = {none, none, none};
  std::vector<int> pick(n, 0);
  auto score = [&]() {
    std::vector<int> load(m, 0);
    for (int u = 0; u < n; ++u) {
      if (inst.live[u]) {
        load[pick[u]] += 1;
      }
    }
    double worst = std::numeric_limits<double>::infinity();
    bool rate_ok = true;
    std::vector<double> share(m, 0.0);
    for (int u = 0; u < n; ++u) {
      if (!inst.live[u]) {
        continue;
      }
      const double r = inst.rate_bps(u, pick[u]);
      const double a = r / load[pick[u]];
      worst = std::min(worst, a);
      rate_ok = rate_ok && a >= b.alpha_min_bps[u];
      share[pick[u]] += r > 0.0 ? b.alpha_min_bps[u] / r : std::numeric_limits<double>::infinity();
    }
    bool power_ok = true;
    for (int s = 0; s < m; ++s) {
      if (load[s] > 0 && std::pow(10.0, inst.sector_power_dbm[s] / 10.0) * share[s] > std::pow(10.0, b.psi_max_dbm[s] / 10.0)) {
        power_ok = false;
      }
    }
    best[2] = std::max(best[2], worst);
    if (power_ok) {
      best[1] = std::max(best[1], worst);
      if (rate_ok) {
        best[0] = std::max(best[0], worst);
      }
    }
  };
  auto rec = [&](auto&& self, int u) -> void {
    if (u == n) {
      score();
      return;
    }
    for (int s = 0; s < m; ++s) {
      if (!inst.allowed(u, s)) {
        continue;
      }
      pick[u] = s;
      self(self, u + 1);
      if (!inst.live[u]) {
        break;
      }
    }
  };
  rec(rec, 0);
  if (best[0] != none) {
    return {best[0], true};
  }
  return {best[1] != none ? best[1] : best[2], false};
}

AssocInstance random_instance(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> rate(1e4, 1e7);
  std::uniform_real_distribution<double> power(30.0, 46.0);
  Eigen::MatrixXd r(n, m);
  for (int u = 0; u < n; ++u) {
    for (int s = 0; s < m; ++s) {
      r(u, s) = std::round(rate(rng));
    }
  }
  AssocInstance inst = make_instance(r);
  for (int u = 0; u < n; ++u) {
    for (int s = 0; s < m; ++s) {
      inst.allowed(u, s) = rng() % 4 != 0;
    }
    inst.allowed(u, static_cast<int>(rng() % m)) = true;
    inst.live[u] = u == 0 || rng() % 5 != 0;
  }
  for (int s = 0; s < m; ++s) {
    inst.sector_power_dbm[s] = power(rng);
  }
  return inst;
}

FeasibilityBounds random_bounds(std::mt19937_64& rng, const AssocInstance& inst) {
  std::uniform_real_distribution<double> floor(0.0, 2e6);
  std::uniform_real_distribution<double> offset(-12.0, 3.0);
  FeasibilityBounds b;
  for (int u = 0; u < inst.users(); ++u) {
    b.alpha_min_bps.push_back(floor(rng));
  }
  for (int s = 0; s < inst.sectors(); ++s) {
    b.psi_max_dbm.push_back(inst.sector_power_dbm[s] + offset(rng));
  }
  return b;
}

}  // namespace

TEST_CASE("candidate sets") {
  const NetworkLayout l = build_default_layout(7, 20, {});
  UserNode psn;
  psn.kind = UserKind::PsnMu;
  CHECK(candidate_set(psn, situation1(), l).size() == 21);
  for (int s : candidate_set(psn, situation1(), l)) {
    CHECK(l.sectors[s].kind == NodeKind::PSN);
  }
  CHECK(candidate_set(psn, situation2(), l).size() == 31);
  UserNode lrn;
  lrn.kind = UserKind::LrnUser;
  for (const ScenarioConfig& sc : scenario_catalog()) {
    const auto c = candidate_set(lrn, sc, l);
    CHECK(c.size() == 8);
    for (int s : c) {
      CHECK(l.sectors[s].kind == NodeKind::LRN);
    }
  }
}

TEST_CASE("oracle examples") {
  SUBCASE("single argmax") {
    Eigen::MatrixXd r(1, 2);
    r << 5e6, 3e6;
    const AssocInstance inst = make_instance(r);
    const OracleResult o = oracle_assign(inst, loose(inst));
    CHECK(o.choice == std::vector<int>{0});
    CHECK(o.objective_bps == 5e6);
    CHECK(o.feasible);
    CHECK(o.matrix.entries(0, 0) == 1.0);
  }
  SUBCASE("symmetric tie") {
    Eigen::MatrixXd r(2, 2);
    r << 4e6, 4e6, 4e6, 4e6;
    const AssocInstance inst = make_instance(r);
    CHECK(oracle_assign(inst, loose(inst)).choice == std::vector<int>{0, 1});
  }
  SUBCASE("sharing halves the rate") {
    Eigen::MatrixXd r(2, 2);
    r << 6e6, 1e6, 6e6, 1e6;
    const AssocInstance inst = make_instance(r);
    const OracleResult o = oracle_assign(inst, loose(inst));
    CHECK(o.objective_bps == 3e6);
  }
  SUBCASE("infeasible floor") {
    Eigen::MatrixXd r(1, 2);
    r << 5e6, 3e6;
    const AssocInstance inst = make_instance(r);
    FeasibilityBounds b = loose(inst);
    b.alpha_min_bps = {1e7};
    const OracleResult o = oracle_assign(inst, b);
    CHECK_FALSE(o.feasible);
    CHECK(o.choice == std::vector<int>{0});
  }
  SUBCASE("power ceiling steers the choice") {
    Eigen::MatrixXd r(1, 2);
    r << 5e6, 3e6;
    AssocInstance inst = make_instance(r);
    inst.sector_power_dbm = {46.0, 30.0};
    FeasibilityBounds b{{1e6}, {38.0, 38.0}};
    const OracleResult o = oracle_assign(inst, b);
    CHECK(o.feasible);
    CHECK(o.choice == std::vector<int>{1});
  }
}

TEST_CASE("oracle matches an independent enumerator") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const AssocInstance inst = random_instance(rng, 4, 3);
    const FeasibilityBounds b = random_bounds(rng, inst);
    const OracleResult o = oracle_assign(inst, b);
    const Reference ref = reference_oracle(inst, b);
    CHECK(o.objective_bps == ref.objective);
    CHECK(o.feasible == ref.feasible);
    const AssignmentEval e = evaluate_assignment(inst, b, o.choice);
    CHECK(e.min_alpha_bps == o.objective_bps);
    for (int u = 0; u < inst.users(); ++u) {
      CHECK(inst.allowed(u, o.choice[u]));
    }
  }
}

TEST_CASE("oracle objective is invariant under user relabelling") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const AssocInstance inst = random_instance(rng, 5, 3);
    const FeasibilityBounds b = random_bounds(rng, inst);
    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    AssocInstance p = inst;
    FeasibilityBounds pb = b;
    for (int u = 0; u < 5; ++u) {
      p.rate_bps.row(u) = inst.rate_bps.row(perm[u]);
      p.rx_dbm.row(u) = inst.rx_dbm.row(perm[u]);
      p.allowed.row(u) = inst.allowed.row(perm[u]);
      p.live[u] = inst.live[perm[u]];
      p.qos[u] = inst.qos[perm[u]];
      pb.alpha_min_bps[u] = b.alpha_min_bps[perm[u]];
    }
    const OracleResult a = oracle_assign(inst, b);
    const OracleResult c = oracle_assign(p, pb);
    CHECK(a.objective_bps == c.objective_bps);
    CHECK(a.feasible == c.feasible);
  }
}

TEST_CASE("oracle size limit") {
  const AssocInstance big = make_instance(Eigen::MatrixXd::Constant(9, 3, 1e6));
  CHECK_THROWS_AS(oracle_assign(big, loose(big)), OracleSizeError);
  const AssocInstance wide = make_instance(Eigen::MatrixXd::Constant(2, 5, 1e6));
  CHECK_THROWS_AS(oracle_assign(wide, loose(wide)), OracleSizeError);
  AssocInstance padded = make_instance(Eigen::MatrixXd::Constant(9, 3, 1e6));
  padded.live[8] = false;
  CHECK_NOTHROW(oracle_assign(padded, loose(padded)));
}

TEST_CASE("padding rows do not load sectors") {
  Eigen::MatrixXd r(2, 1);
  r << 4e6, 4e6;
  AssocInstance inst = make_instance(r);
  inst.live[1] = false;
  const AssignmentEval e = evaluate_assignment(inst, loose(inst), {0, 0});
  CHECK(e.alpha_bps == std::vector<double>{4e6, 0.0});
  CHECK(e.min_alpha_bps == 4e6);
}

TEST_CASE("harden") {
  AssignmentMatrix uniform{Eigen::MatrixXd::Constant(2, 3, 1.0 / 3.0)};
  CHECK(harden(uniform).choices() == std::vector<int>{0, 0});
  CandidateMask mask = CandidateMask::Constant(2, 3, true);
  mask(0, 0) = false;
  CHECK(harden(uniform, mask).choices() == std::vector<int>{1, 0});

  const AssignmentMatrix one = AssignmentMatrix::one_hot({2, 1}, 3);
  CHECK(harden(one).entries == one.entries);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd m(4, 3);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 3; ++j) {
        m(i, j) = u01(rng);
      }
      m.row(i) /= m.row(i).sum();
    }
    const AssignmentMatrix a{m};
    CHECK(a.is_row_stochastic());
    const AssignmentMatrix h = harden(a);
    for (int i = 0; i < 4; ++i) {
      CHECK(h.entries.row(i).sum() == 1.0);
      CHECK((h.entries.row(i).array() == 1.0).count() == 1);
    }
    CHECK(harden(h).entries == h.entries);
  }
  CandidateMask none = CandidateMask::Constant(1, 2, false);
  CHECK_THROWS_AS(harden(AssignmentMatrix{Eigen::MatrixXd::Constant(1, 2, 0.5)}, none), std::invalid_argument);
}
