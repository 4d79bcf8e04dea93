#include "icsim/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "icsim/rng.hpp"

namespace icsim {

namespace {

constexpr int kModelFormatVersion = 1;

Eigen::MatrixXd stack_features(std::span<const Example> examples, int input_dim) {
  Eigen::MatrixXd x(input_dim, static_cast<Eigen::Index>(examples.size()));
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].features.size() != input_dim) {
      throw ModelError("feature dimension " + std::to_string(examples[i].features.size()) +
                       " does not match model input " + std::to_string(input_dim));
    }
    x.col(static_cast<Eigen::Index>(i)) = examples[i].features;
  }
  return x;
}

// Hidden activations for a batch; acts[0] is the input.
std::vector<Eigen::MatrixXd> hidden_pass(const MLPModel& model, const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> acts{x};
  for (int l = 0; l + 1 < static_cast<int>(model.layers.size()); ++l) {
    const DenseLayer& layer = model.layers[l];
    Eigen::MatrixXd z = layer.weight * acts.back();
    z.colwise() += layer.bias;
    acts.push_back(z.array().tanh().matrix());
  }
  return acts;
}

// In-place masked softmax over each user's block of `sectors` rows.
void masked_softmax(Eigen::Ref<Eigen::VectorXd> column, const CandidateMask& allowed, int users, int sectors) {
  for (int u = 0; u < users; ++u) {
    double peak = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < sectors; ++s) {
      if (allowed(u, s)) {
        peak = std::max(peak, column(u * sectors + s));
      }
    }
    if (!std::isfinite(peak)) {
      throw ModelError("user row " + std::to_string(u) + " has no allowed sector");
    }
    double total = 0.0;
    for (int s = 0; s < sectors; ++s) {
      double& v = column(u * sectors + s);
      v = allowed(u, s) ? std::exp(v - peak) : 0.0;
      total += v;
    }
    for (int s = 0; s < sectors; ++s) {
      column(u * sectors + s) /= total;
    }
  }
}

Eigen::MatrixXd output_probabilities(const MLPModel& model, const std::vector<Eigen::MatrixXd>& acts,
                                     std::span<const Example> examples) {
  const DenseLayer& head = model.layers.back();
  Eigen::MatrixXd z = head.weight * acts.back();
  z.colwise() += head.bias;
  z /= model.temperature;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    masked_softmax(z.col(static_cast<Eigen::Index>(i)), examples[i].allowed, model.users, model.sectors);
  }
  return z;
}

double live_rows(const Example& e) {
  return static_cast<double>(std::count(e.live.begin(), e.live.end(), true));
}

double batch_loss(const MLPModel& model, const Eigen::MatrixXd& probs, std::span<const Example> examples) {
  double total = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& e = examples[i];
    const double n_live = live_rows(e);
    if (n_live == 0.0) {
      continue;
    }
    double row_sum = 0.0;
    for (int u = 0; u < model.users; ++u) {
      if (e.live[u]) {
        const double p = probs(u * model.sectors + e.label[u], static_cast<Eigen::Index>(i));
        row_sum -= std::log(std::max(p, 1e-300));
      }
    }
    total += row_sum / n_live;
  }
  return total / static_cast<double>(examples.size());
}

}  // namespace

std::vector<int> MLPModel::layer_widths() const {
  std::vector<int> widths{input_dim()};
  for (const DenseLayer& l : layers) {
    widths.push_back(static_cast<int>(l.weight.rows()));
  }
  return widths;
}

std::size_t MLPModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

void MLPModel::validate() const {
  if (static_cast<int>(layers.size()) != kLayers) {
    throw ModelError("model must have exactly 4 dense layers, got " + std::to_string(layers.size()));
  }
  if (layers.front().weight.rows() != kFirstHidden) {
    throw ModelError("first hidden layer must be 240 wide");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].weight.rows()) {
      throw ModelError("bias size mismatch in layer " + std::to_string(l));
    }
    if (l > 0 && layers[l].weight.cols() != layers[l - 1].weight.rows()) {
      throw ModelError("layer " + std::to_string(l) + " input does not match previous output");
    }
  }
  if (users <= 0 || sectors <= 0 || layers.back().weight.rows() != users * sectors) {
    throw ModelError("output width must equal users x sectors");
  }
  if (!(temperature > 0.0)) {
    throw ModelError("softmax temperature must be positive");
  }
}

MLPModel MLPModel::create(int input_dim, int users, int sectors, std::array<int, 2> tail_hidden, std::uint64_t seed,
                          double temperature) {
  if (input_dim <= 0 || users <= 0 || sectors <= 0 || tail_hidden[0] <= 0 || tail_hidden[1] <= 0) {
    throw ModelError("model dimensions must be positive");
  }
  MLPModel model;
  model.users = users;
  model.sectors = sectors;
  model.temperature = temperature;
  const std::array<int, 5> widths{input_dim, kFirstHidden, tail_hidden[0], tail_hidden[1], users * sectors};
  std::mt19937_64 rng(derive_seed(seed, {0x6d6c70}));
  for (int l = 0; l < kLayers; ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        layer.weight(r, c) = dist(rng);
      }
    }
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

AssignmentMatrix forward(const MLPModel& model, const Eigen::VectorXd& features, const CandidateMask& allowed) {
  if (features.size() != model.input_dim()) {
    throw ModelError("feature dimension " + std::to_string(features.size()) + " does not match model input " +
                     std::to_string(model.input_dim()));
  }
  if (allowed.rows() != model.users || allowed.cols() != model.sectors) {
    throw ModelError("candidate mask shape does not match the model output");
  }
  Example e{features, allowed, {}, {}};
  const std::span<const Example> one(&e, 1);
  const Eigen::MatrixXd probs = output_probabilities(model, hidden_pass(model, features), one);
  AssignmentMatrix out{Eigen::MatrixXd(model.users, model.sectors)};
  for (int u = 0; u < model.users; ++u) {
    for (int s = 0; s < model.sectors; ++s) {
      out.entries(u, s) = probs(u * model.sectors + s, 0);
    }
  }
  return out;
}

double loss(const MLPModel& model, std::span<const Example> examples) {
  if (examples.empty()) {
    return 0.0;
  }
  const auto acts = hidden_pass(model, stack_features(examples, model.input_dim()));
  return batch_loss(model, output_probabilities(model, acts, examples), examples);
}

double loss_and_gradient(const MLPModel& model, std::span<const Example> examples, std::vector<DenseLayer>& grad) {
  const int n_layers = static_cast<int>(model.layers.size());
  grad.resize(model.layers.size());
  for (int l = 0; l < n_layers; ++l) {
    grad[l].weight = Eigen::MatrixXd::Zero(model.layers[l].weight.rows(), model.layers[l].weight.cols());
    grad[l].bias = Eigen::VectorXd::Zero(model.layers[l].bias.size());
  }
  if (examples.empty()) {
    return 0.0;
  }
  const auto acts = hidden_pass(model, stack_features(examples, model.input_dim()));
  const Eigen::MatrixXd probs = output_probabilities(model, acts, examples);
  const double value = batch_loss(model, probs, examples);

  // d loss / d head pre-activation: (p - y) / tau per live row, scaled by the averaging weights.
  const auto n = static_cast<double>(examples.size());
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& e = examples[i];
    const double n_live = live_rows(e);
    if (n_live == 0.0) {
      continue;
    }
    const double w = 1.0 / (n * n_live * model.temperature);
    const auto col = static_cast<Eigen::Index>(i);
    for (int u = 0; u < model.users; ++u) {
      if (!e.live[u]) {
        continue;
      }
      for (int s = 0; s < model.sectors; ++s) {
        const int r = u * model.sectors + s;
        delta(r, col) = w * (probs(r, col) - (s == e.label[u] ? 1.0 : 0.0));
      }
    }
  }

  for (int l = n_layers - 1; l >= 0; --l) {
    grad[l].weight = delta * acts[l].transpose();
    grad[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = model.layers[l].weight.transpose() * delta;
      delta = (back.array() * (1.0 - acts[l].array().square())).matrix();
    }
  }
  return value;
}

TrainResult train(MLPModel model, std::span<const Example> dataset, const TrainOptions& options) {
  if (dataset.empty()) {
    throw ModelError("training set is empty");
  }
  model.validate();
  const int n_layers = static_cast<int>(model.layers.size());
  std::vector<DenseLayer> m(model.layers.size());
  std::vector<DenseLayer> v(model.layers.size());
  for (int l = 0; l < n_layers; ++l) {
    m[l] = {Eigen::MatrixXd::Zero(model.layers[l].weight.rows(), model.layers[l].weight.cols()),
            Eigen::VectorXd::Zero(model.layers[l].bias.size())};
    v[l] = m[l];
  }

  TrainResult result;
  result.model = model;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;
  std::vector<DenseLayer> grad;
  long long t = 0;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t batch_size = static_cast<std::size_t>(std::max(1, options.batch_size));

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(options.seed, {static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + batch_size); ++k) {
        batch.push_back(dataset[order[k]]);
      }
      loss_and_gradient(model, batch, grad);
      ++t;
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(t));
      for (int l = 0; l < n_layers; ++l) {
        auto adam = [&](auto& param, auto& g, auto& mom, auto& vel) {
          mom = options.beta1 * mom + (1.0 - options.beta1) * g;
          vel = (options.beta2 * vel.array() + (1.0 - options.beta2) * g.array().square()).matrix();
          param -= (options.step * (mom.array() / c1) / ((vel.array() / c2).sqrt() + options.epsilon)).matrix();
        };
        adam(model.layers[l].weight, grad[l].weight, m[l].weight, v[l].weight);
        adam(model.layers[l].bias, grad[l].bias, m[l].bias, v[l].bias);
      }
    }
    const double epoch_loss = loss(model, dataset);
    result.raw_loss.push_back(epoch_loss);
    if (epoch_loss < best) {
      best = epoch_loss;
      result.model = model;
    }
    result.loss_trace.push_back(best);
  }
  return result;
}

void save_model(const MLPModel& model, const std::string& path) {
  model.validate();
  using nlohmann::json;
  json j;
  j["format"] = "icsim-mlp";
  j["version"] = kModelFormatVersion;
  j["users"] = model.users;
  j["sectors"] = model.sectors;
  j["temperature"] = model.temperature;
  j["layer_widths"] = model.layer_widths();
  j["activations"] = {"tanh", "tanh", "tanh", "softmax"};
  for (const DenseLayer& l : model.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        w.push_back(l.weight(r, c));
      }
    }
    j["layers"].push_back({{"weight", w}, {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  std::ofstream out(path);
  if (!out) {
    throw ModelError("cannot write model file " + path);
  }
  out << j.dump() << '\n';
}

MLPModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ModelError("cannot open model file " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("model file " + path + " is not valid JSON: " + e.what());
  }
  try {
    if (j.at("format") != "icsim-mlp" || j.at("version") != kModelFormatVersion) {
      throw ModelError("unsupported model format in " + path);
    }
    MLPModel model;
    model.users = j.at("users").get<int>();
    model.sectors = j.at("sectors").get<int>();
    model.temperature = j.at("temperature").get<double>();
    const auto widths = j.at("layer_widths").get<std::vector<int>>();
    const auto& layers = j.at("layers");
    if (widths.size() != layers.size() + 1) {
      throw ModelError("layer_widths does not match layer count in " + path);
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto w = layers[l].at("weight").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      const int rows = widths[l + 1];
      const int cols = widths[l];
      if (w.size() != static_cast<std::size_t>(rows) * cols || b.size() != static_cast<std::size_t>(rows)) {
        throw ModelError("layer " + std::to_string(l) + " has the wrong number of parameters in " + path);
      }
      DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          layer.weight(r, c) = w[static_cast<std::size_t>(r) * cols + c];
        }
        layer.bias(r) = b[r];
      }
      model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("malformed model file " + path + ": " + e.what());
  }
}

}  // namespace icsim
