#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "icsim/mlp.hpp"

namespace icsim::testing {

/// Random examples matching a model's shape; each row allows at least one sector.
inline std::vector<Example> random_examples(const MLPModel& model, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Example> out;
  for (int i = 0; i < n; ++i) {
    Example e;
    e.features = Eigen::VectorXd::NullaryExpr(model.input_dim(), [&] { return z(rng); });
    e.allowed = CandidateMask::Constant(model.users, model.sectors, true);
    e.live.assign(static_cast<std::size_t>(model.users), true);
    for (int u = 0; u < model.users; ++u) {
      for (int s = 0; s < model.sectors; ++s) {
        e.allowed(u, s) = rng() % 3 != 0;
      }
      const int keep = static_cast<int>(rng() % model.sectors);
      e.allowed(u, keep) = true;
      e.label.push_back(keep);
      e.live[u] = u == 0 || rng() % 4 != 0;
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// Worst relative error between the analytic gradient and central differences
/// over `probes` randomly chosen parameters (every bias of the head included).
inline double gradient_check(MLPModel model, const std::vector<Example>& examples, int probes, std::mt19937_64& rng) {
  std::vector<DenseLayer> grad;
  loss_and_gradient(model, examples, grad);
  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = loss(model, examples);
    param = saved - h;
    const double down = loss(model, examples);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  DenseLayer& head = model.layers.back();
  for (Eigen::Index k = 0; k < head.bias.size(); ++k) {
    probe(head.bias(k), grad.back().bias(k));
  }
  for (int p = 0; p < probes; ++p) {
    const auto l = static_cast<std::size_t>(rng() % model.layers.size());
    DenseLayer& layer = model.layers[l];
    if (rng() % 4 == 0) {
      const auto k = static_cast<Eigen::Index>(rng() % layer.bias.size());
      probe(layer.bias(k), grad[l].bias(k));
    } else {
      const auto r = static_cast<Eigen::Index>(rng() % layer.weight.rows());
      const auto c = static_cast<Eigen::Index>(rng() % layer.weight.cols());
      probe(layer.weight(r, c), grad[l].weight(r, c));
    }
  }
  return worst;
}

}  // namespace icsim::testing
