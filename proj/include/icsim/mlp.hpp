#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icsim/assoc.hpp"

namespace icsim {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Four dense layers: three tanh hidden layers (the first 240 wide) and a
/// temperature-scaled softmax head producing one row per user.
struct MLPModel {
  static constexpr int kLayers = 4;
  static constexpr int kFirstHidden = 240;

  int users = 0;
  int sectors = 0;
  double temperature = 1.0;
  std::vector<DenseLayer> layers;

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  std::vector<int> layer_widths() const;
  std::size_t parameter_count() const;
  void validate() const;

  /// Glorot-uniform initialisation, deterministic in seed.
  static MLPModel create(int input_dim, int users, int sectors, std::array<int, 2> tail_hidden = {120, 60},
                         std::uint64_t seed = 1, double temperature = 1.0);
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One supervised example: features, per-user allowed mask, target sector per user.
struct Example {
  Eigen::VectorXd features;
  CandidateMask allowed;
  std::vector<int> label;
  std::vector<bool> live;
};

/// Dense forward pass; disallowed sectors get zero probability.
AssignmentMatrix forward(const MLPModel& model, const Eigen::VectorXd& features, const CandidateMask& allowed);

/// Mean over examples of the mean live-row cross-entropy.
double loss(const MLPModel& model, std::span<const Example> examples);

/// Same loss plus its gradient (one DenseLayer of partials per model layer).
double loss_and_gradient(const MLPModel& model, std::span<const Example> examples, std::vector<DenseLayer>& grad);

struct TrainOptions {
  int epochs = 100;
  double step = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainResult {
  MLPModel model;                 // lowest-loss epoch snapshot
  std::vector<double> raw_loss;   // full training loss after each epoch
  std::vector<double> loss_trace; // running minimum of raw_loss
};

/// Adam on the row-wise cross-entropy against oracle labels.
TrainResult train(MLPModel model, std::span<const Example> dataset, const TrainOptions& options);

void save_model(const MLPModel& model, const std::string& path);
MLPModel load_model(const std::string& path);

}  // namespace icsim
