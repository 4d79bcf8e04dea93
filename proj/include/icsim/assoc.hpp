#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "icsim/layout.hpp"
#include "icsim/scenario.hpp"
#include "icsim/traffic.hpp"

namespace icsim {

using CandidateMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Sectors a user may attach to in a scenario.
std::vector<int> candidate_set(const UserNode& user, const ScenarioConfig& scenario, const NetworkLayout& layout);

/// Row-stochastic users x sectors association.
struct AssignmentMatrix {
  Eigen::MatrixXd entries;

  int users() const { return static_cast<int>(entries.rows()); }
  int sectors() const { return static_cast<int>(entries.cols()); }
  /// Rows sum to 1 within tol, entries >= 0.
  bool is_row_stochastic(double tol = 1e-6) const;
  /// Selected sector per user (argmax, ties to the lowest index).
  std::vector<int> choices() const;

  static AssignmentMatrix one_hot(const std::vector<int>& choice, int sectors);
};

/// Row argmax restricted to the allowed sectors; ties go to the lowest sector index.
AssignmentMatrix harden(const AssignmentMatrix& matrix, const CandidateMask& allowed);
AssignmentMatrix harden(const AssignmentMatrix& matrix);

/// Small max-min association problem. Padding rows (live == false) do not
/// take part in the objective or the constraints.
struct AssocInstance {
  Eigen::MatrixXd rate_bps;        // full-carrier rate of user u on sector s
  Eigen::MatrixXd rx_dbm;          // reference received power, feature input
  CandidateMask allowed;
  std::vector<bool> live;
  std::vector<TrafficKind> qos;
  std::vector<double> sector_power_dbm;

  int users() const { return static_cast<int>(rate_bps.rows()); }
  int sectors() const { return static_cast<int>(rate_bps.cols()); }
  int live_users() const;
};

struct FeasibilityBounds {
  std::vector<double> alpha_min_bps;  // per user
  std::vector<double> psi_max_dbm;    // per sector power ceiling
};

struct AssignmentEval {
  std::vector<double> alpha_bps;  // per user, 0 for padding
  double min_alpha_bps = 0.0;
  bool rate_ok = true;   // alpha >= alpha_min for every live user
  bool power_ok = true;  // per-sector power <= psi_max
  bool feasible() const { return rate_ok && power_ok; }
};

/// Users sharing a sector split its time equally: alpha = rate / load.
/// Sector power = tx power x sum of the PRB fractions needed for alpha_min.
AssignmentEval evaluate_assignment(const AssocInstance& instance, const FeasibilityBounds& bounds,
                                   const std::vector<int>& choice);

struct OracleResult {
  std::vector<int> choice;
  double objective_bps = 0.0;
  bool feasible = false;
  AssignmentMatrix matrix;
};

class OracleSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kOracleMaxUsers = 8;
inline constexpr int kOracleMaxSectors = 4;

/// Exhaustive max-min association. Among assignments meeting the rate floor
/// and the power ceiling, maximises the minimum user rate (ties to the
/// lexicographically smallest choice vector). If none is feasible, the best
/// assignment ignoring the rate floor is returned with feasible == false.
OracleResult oracle_assign(const AssocInstance& instance, const FeasibilityBounds& bounds);

}  // namespace icsim
