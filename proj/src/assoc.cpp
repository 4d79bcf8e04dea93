#include "icsim/assoc.hpp"

#include <limits>
#include <string>

#include "icsim/channel.hpp"

namespace icsim {

std::vector<int> candidate_set(const UserNode& user, const ScenarioConfig& scenario, const NetworkLayout& layout) {
  std::vector<int> out;
  for (const BSNode& n : layout.sectors) {
    const bool ok = user.kind == UserKind::LrnUser ? n.kind == NodeKind::LRN
                                                   : (scenario.rac_sharing || n.kind == NodeKind::PSN);
    if (ok) {
      out.push_back(n.id);
    }
  }
  return out;
}

bool AssignmentMatrix::is_row_stochastic(double tol) const {
  if ((entries.array() < 0.0).any()) {
    return false;
  }
  for (Eigen::Index r = 0; r < entries.rows(); ++r) {
    if (std::abs(entries.row(r).sum() - 1.0) > tol) {
      return false;
    }
  }
  return true;
}

std::vector<int> AssignmentMatrix::choices() const {
  std::vector<int> out;
  for (Eigen::Index r = 0; r < entries.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < entries.cols(); ++c) {
      if (entries(r, c) > entries(r, best)) {
        best = c;
      }
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

AssignmentMatrix AssignmentMatrix::one_hot(const std::vector<int>& choice, int sectors) {
  AssignmentMatrix m{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(choice.size()), sectors)};
  for (std::size_t u = 0; u < choice.size(); ++u) {
    m.entries(static_cast<Eigen::Index>(u), choice[u]) = 1.0;
  }
  return m;
}

AssignmentMatrix harden(const AssignmentMatrix& matrix, const CandidateMask& allowed) {
  std::vector<int> choice;
  for (Eigen::Index r = 0; r < matrix.entries.rows(); ++r) {
    Eigen::Index best = -1;
    for (Eigen::Index c = 0; c < matrix.entries.cols(); ++c) {
      if (!allowed(r, c)) {
        continue;
      }
      if (best < 0 || matrix.entries(r, c) > matrix.entries(r, best)) {
        best = c;
      }
    }
    if (best < 0) {
      throw std::invalid_argument("harden: user " + std::to_string(r) + " has no allowed sector");
    }
    choice.push_back(static_cast<int>(best));
  }
  return AssignmentMatrix::one_hot(choice, matrix.sectors());
}

AssignmentMatrix harden(const AssignmentMatrix& matrix) {
  return harden(matrix, CandidateMask::Constant(matrix.entries.rows(), matrix.entries.cols(), true));
}

int AssocInstance::live_users() const {
  int n = 0;
  for (bool l : live) {
    n += l ? 1 : 0;
  }
  return n;
}

AssignmentEval evaluate_assignment(const AssocInstance& instance, const FeasibilityBounds& bounds,
                                   const std::vector<int>& choice) {
  const int n_users = instance.users();
  const int n_sectors = instance.sectors();
  std::vector<int> load(static_cast<std::size_t>(n_sectors), 0);
  for (int u = 0; u < n_users; ++u) {
    if (instance.live[u]) {
      ++load[choice[u]];
    }
  }
  AssignmentEval eval;
  eval.alpha_bps.assign(static_cast<std::size_t>(n_users), 0.0);
  eval.min_alpha_bps = std::numeric_limits<double>::infinity();
  std::vector<double> fraction(static_cast<std::size_t>(n_sectors), 0.0);
  for (int u = 0; u < n_users; ++u) {
    if (!instance.live[u]) {
      continue;
    }
    const int s = choice[u];
    const double rate = instance.rate_bps(u, s);
    const double alpha = rate / load[s];
    eval.alpha_bps[u] = alpha;
    eval.min_alpha_bps = std::min(eval.min_alpha_bps, alpha);
    if (alpha < bounds.alpha_min_bps[u]) {
      eval.rate_ok = false;
    }
    fraction[s] += rate > 0.0 ? bounds.alpha_min_bps[u] / rate : std::numeric_limits<double>::infinity();
  }
  if (instance.live_users() == 0) {
    eval.min_alpha_bps = 0.0;
  }
  for (int s = 0; s < n_sectors; ++s) {
    if (load[s] == 0) {
      continue;
    }
    const double used_mw = dbm_to_mw(instance.sector_power_dbm[s]) * fraction[s];
    if (used_mw > dbm_to_mw(bounds.psi_max_dbm[s])) {
      eval.power_ok = false;
    }
  }
  return eval;
}

OracleResult oracle_assign(const AssocInstance& instance, const FeasibilityBounds& bounds) {
  const int n_users = instance.users();
  const int n_sectors = instance.sectors();
  if (instance.live_users() > kOracleMaxUsers || n_sectors > kOracleMaxSectors) {
    throw OracleSizeError("oracle instance too large for exhaustive search: " + std::to_string(instance.live_users()) +
                          " users x " + std::to_string(n_sectors) + " sectors (limit " +
                          std::to_string(kOracleMaxUsers) + " x " + std::to_string(kOracleMaxSectors) + ")");
  }

  // Each user walks its own allowed list; padding rows are pinned.
  std::vector<std::vector<int>> options(static_cast<std::size_t>(n_users));
  for (int u = 0; u < n_users; ++u) {
    for (int s = 0; s < n_sectors; ++s) {
      if (instance.allowed(u, s)) {
        options[u].push_back(s);
      }
    }
    if (options[u].empty()) {
      throw std::invalid_argument("oracle_assign: user " + std::to_string(u) + " has no allowed sector");
    }
    if (!instance.live[u]) {
      options[u].resize(1);
    }
  }

  std::vector<std::size_t> digit(static_cast<std::size_t>(n_users), 0);
  std::vector<int> choice(static_cast<std::size_t>(n_users));

  // Three tiers: fully feasible, power-feasible only, anything.
  struct Best {
    bool set = false;
    double objective = 0.0;
    std::vector<int> choice;
  };
  Best feasible, power_only, any;
  auto offer = [&](Best& best, double objective) {
    if (!best.set || objective > best.objective) {
      best = {true, objective, choice};
    }
  };

  while (true) {
    for (int u = 0; u < n_users; ++u) {
      choice[u] = options[u][digit[u]];
    }
    const AssignmentEval eval = evaluate_assignment(instance, bounds, choice);
    offer(any, eval.min_alpha_bps);
    if (eval.power_ok) {
      offer(power_only, eval.min_alpha_bps);
      if (eval.rate_ok) {
        offer(feasible, eval.min_alpha_bps);
      }
    }
    // Odometer with the first user most significant: lexicographic order.
    int u = n_users - 1;
    while (u >= 0 && ++digit[u] == options[u].size()) {
      digit[u] = 0;
      --u;
    }
    if (u < 0) {
      break;
    }
  }

  const Best& pick = feasible.set ? feasible : (power_only.set ? power_only : any);
  OracleResult result;
  result.choice = pick.choice;
  result.objective_bps = pick.objective;
  result.feasible = feasible.set;
  result.matrix = AssignmentMatrix::one_hot(pick.choice, n_sectors);
  return result;
}

}  // namespace icsim
