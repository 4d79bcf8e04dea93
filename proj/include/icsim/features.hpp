#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icsim/assoc.hpp"
#include "icsim/mlp.hpp"

namespace icsim {

inline constexpr int kFeatureVersion = 1;

/// Fixed inference tile: `users` rows (padded) by `sectors` candidate columns.
struct TileShape {
  int users = 4;
  int sectors = 3;

  /// QoS one-hot (2 per user), CSI (per user-sector), max throughput (per user-sector).
  int feature_dim() const { return 2 * users + 2 * users * sectors; }
};

/// Received power mapped affinely from [-160, -40] dBm to [-1, 1].
double normalise_rx_dbm(double rx_dbm);

/// Feature vector (layout version 1). Masked and padding entries use CSI -1 and rate 0.
Eigen::VectorXd encode_features(const AssocInstance& instance);

struct TrainingSample {
  AssocInstance instance;
  FeasibilityBounds bounds;
  std::vector<int> label;
  double objective_bps = 0.0;
  bool feasible = false;

  Example example() const;
};

/// Labels an instance with the exhaustive oracle.
TrainingSample label_instance(AssocInstance instance, FeasibilityBounds bounds);

class DatasetSchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetHeader {
  TileShape shape;
  int feature_dim = 0;
};

/// Record-per-line JSON: one header line, then one line per sample.
void write_dataset(const std::string& path, const TileShape& shape, const std::vector<TrainingSample>& samples);
std::vector<TrainingSample> read_dataset(const std::string& path, DatasetHeader* header = nullptr);

}  // namespace icsim
