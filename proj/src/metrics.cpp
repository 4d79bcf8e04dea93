#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "icsim/engine.hpp"

namespace icsim {

std::vector<CdfPoint> empirical_cdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<CdfPoint> out;
  out.reserve(samples.size());
  const auto n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.push_back({samples[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

std::vector<CdfPoint> interference_cdf(std::span<const double> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("interference_cdf: no samples");
  }
  return empirical_cdf({samples.begin(), samples.end()});
}

double quantile(std::vector<double> samples, double q) {
  if (samples.empty()) {
    throw std::invalid_argument("quantile: no samples");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("quantile: q must be in [0, 1]");
  }
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

std::vector<std::pair<double, double>> outage_curve(std::span<const double> sinr_samples,
                                                    std::span<const double> thresholds_db) {
  if (sinr_samples.empty()) {
    throw std::invalid_argument("outage_curve: no SINR samples");
  }
  std::vector<double> sorted(sinr_samples.begin(), sinr_samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  for (double th : thresholds_db) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), th) - sorted.begin();
    out.emplace_back(th, static_cast<double>(below) / static_cast<double>(sorted.size()));
  }
  return out;
}

void MetricsReport::merge(const DropFragment& f) {
  throughput_samples.insert(throughput_samples.end(), f.throughput_bps.begin(), f.throughput_bps.end());
  sinr_samples.insert(sinr_samples.end(), f.sinr_db.begin(), f.sinr_db.end());
  interference_samples.insert(interference_samples.end(), f.interference_dbm.begin(), f.interference_dbm.end());
  audit.merge(f.audit);
  ++drops;
}

std::vector<MetricsReport> run_scenarios(const SimParams& params, const std::vector<ScenarioConfig>& scenarios,
                                         const MLPModel* model, int threads) {
  params.validate();
  struct Task {
    std::size_t scenario;
    std::uint64_t seed;
    int drop;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    scenarios[i].validate(model != nullptr);
    for (std::uint64_t seed : scenarios[i].seeds) {
      for (int d = 0; d < scenarios[i].n_drops; ++d) {
        tasks.push_back({i, seed, d});
      }
    }
  }

  std::vector<DropFragment> fragments(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::string error_context;
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const Task& task = tasks[k];
      const ScenarioConfig& sc = scenarios[task.scenario];
      try {
        const Drop drop = make_drop(params, drop_seed(task.seed, task.drop), sc.n_tti);
        fragments[k] = run_drop(drop, sc, params, model);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
          error_context = "scenario " + sc.label + ", seed " + std::to_string(task.seed) + ", drop " +
                          std::to_string(task.drop) + ": " + e.what();
          error = std::current_exception();
        }
        next = tasks.size();
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads =
      std::min<std::size_t>(tasks.size(), threads > 0 ? static_cast<std::size_t>(threads) : hw);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread& th : pool) {
      th.join();
    }
  }
  if (error) {
    throw std::runtime_error(error_context);
  }

  std::vector<MetricsReport> reports(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    reports[i].scenario_label = scenarios[i].label;
  }
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    reports[tasks[k].scenario].merge(fragments[k]);
  }
  return reports;
}

}  // namespace icsim
