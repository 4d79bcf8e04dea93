#include "icsim/features.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace icsim {

namespace {

using nlohmann::json;

constexpr const char* kDatasetFormat = "icsim-dataset";

std::string qos_name(TrafficKind k) { return k == TrafficKind::Voip ? "voip" : "video"; }

TrafficKind parse_qos(const std::string& s) {
  if (s == "voip") {
    return TrafficKind::Voip;
  }
  if (s == "video") {
    return TrafficKind::Video;
  }
  throw DatasetSchemaError("unknown qos value '" + s + "'");
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = m(r, c);
    }
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, int rows, int cols, const char* field) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw DatasetSchemaError(std::string("field '") + field + "' has the wrong number of rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != cols) {
      throw DatasetSchemaError(std::string("field '") + field + "' has the wrong number of columns");
    }
    for (int c = 0; c < cols; ++c) {
      m(r, c) = row[c];
    }
  }
  return m;
}

template <typename T>
std::vector<T> vector_field(const json& rec, const char* field, std::size_t n) {
  auto v = rec.at(field).get<std::vector<T>>();
  if (v.size() != n) {
    throw DatasetSchemaError(std::string("field '") + field + "' has length " + std::to_string(v.size()) +
                             ", expected " + std::to_string(n));
  }
  return v;
}

}  // namespace

double normalise_rx_dbm(double rx_dbm) { return std::clamp((rx_dbm + 100.0) / 60.0, -1.0, 1.0); }

Eigen::VectorXd encode_features(const AssocInstance& instance) {
  const int users = instance.users();
  const int sectors = instance.sectors();
  const TileShape shape{users, sectors};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(shape.feature_dim());
  const int csi_base = 2 * users;
  const int rate_base = csi_base + users * sectors;
  for (int u = 0; u < users; ++u) {
    if (instance.live[u]) {
      x(2 * u + (instance.qos[u] == TrafficKind::Voip ? 0 : 1)) = 1.0;
    }
    for (int s = 0; s < sectors; ++s) {
      const bool visible = instance.live[u] && instance.allowed(u, s);
      x(csi_base + u * sectors + s) = visible ? normalise_rx_dbm(instance.rx_dbm(u, s)) : -1.0;
      x(rate_base + u * sectors + s) = visible ? instance.rate_bps(u, s) / 10e6 : 0.0;
    }
  }
  return x;
}

Example TrainingSample::example() const {
  return {encode_features(instance), instance.allowed, label, instance.live};
}

TrainingSample label_instance(AssocInstance instance, FeasibilityBounds bounds) {
  const OracleResult r = oracle_assign(instance, bounds);
  TrainingSample s;
  s.label = r.choice;
  s.objective_bps = r.objective_bps;
  s.feasible = r.feasible;
  s.instance = std::move(instance);
  s.bounds = std::move(bounds);
  return s;
}

void write_dataset(const std::string& path, const TileShape& shape, const std::vector<TrainingSample>& samples) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write dataset file " + path);
  }
  json header{{"format", kDatasetFormat},
              {"version", kFeatureVersion},
              {"users", shape.users},
              {"sectors", shape.sectors},
              {"feature_dim", shape.feature_dim()}};
  out << header.dump() << '\n';
  for (const TrainingSample& s : samples) {
    const AssocInstance& in = s.instance;
    if (in.users() != shape.users || in.sectors() != shape.sectors) {
      throw DatasetSchemaError("sample shape does not match the dataset tile");
    }
    json allowed = json::array();
    for (int u = 0; u < in.users(); ++u) {
      std::vector<bool> row;
      for (int s2 = 0; s2 < in.sectors(); ++s2) {
        row.push_back(in.allowed(u, s2));
      }
      allowed.push_back(row);
    }
    std::vector<std::string> qos;
    for (TrafficKind k : in.qos) {
      qos.push_back(qos_name(k));
    }
    json rec{{"rate_bps", matrix_to_json(in.rate_bps)},
             {"rx_dbm", matrix_to_json(in.rx_dbm)},
             {"allowed", allowed},
             {"qos", qos},
             {"live", in.live},
             {"sector_power_dbm", in.sector_power_dbm},
             {"alpha_min_bps", s.bounds.alpha_min_bps},
             {"psi_max_dbm", s.bounds.psi_max_dbm},
             {"label", s.label},
             {"objective", s.objective_bps},
             {"feasible", s.feasible}};
    out << rec.dump() << '\n';
  }
}

std::vector<TrainingSample> read_dataset(const std::string& path, DatasetHeader* header_out) {
  std::ifstream in(path);
  if (!in) {
    throw DatasetSchemaError("cannot open dataset file " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DatasetSchemaError(path + ": missing header line");
  }
  DatasetHeader header;
  try {
    const json h = json::parse(line);
    if (h.at("format") != kDatasetFormat || h.at("version") != kFeatureVersion) {
      throw DatasetSchemaError(path + ": unsupported dataset format or version");
    }
    header.shape = {h.at("users").get<int>(), h.at("sectors").get<int>()};
    header.feature_dim = h.at("feature_dim").get<int>();
  } catch (const json::exception& e) {
    throw DatasetSchemaError(path + ":1: malformed header: " + e.what());
  }
  if (header.shape.users <= 0 || header.shape.sectors <= 0 || header.feature_dim != header.shape.feature_dim()) {
    throw DatasetSchemaError(path + ":1: inconsistent tile shape in header");
  }

  const int users = header.shape.users;
  const int sectors = header.shape.sectors;
  const auto nu = static_cast<std::size_t>(users);
  const auto ns = static_cast<std::size_t>(sectors);
  std::vector<TrainingSample> samples;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      const json rec = json::parse(line);
      TrainingSample s;
      AssocInstance& inst = s.instance;
      inst.rate_bps = matrix_from_json(rec.at("rate_bps"), users, sectors, "rate_bps");
      inst.rx_dbm = matrix_from_json(rec.at("rx_dbm"), users, sectors, "rx_dbm");
      const json& allowed = rec.at("allowed");
      if (!allowed.is_array() || allowed.size() != nu) {
        throw DatasetSchemaError("field 'allowed' has the wrong number of rows");
      }
      inst.allowed = CandidateMask(users, sectors);
      for (int u = 0; u < users; ++u) {
        const auto row = allowed[u].get<std::vector<bool>>();
        if (row.size() != ns) {
          throw DatasetSchemaError("field 'allowed' has the wrong number of columns");
        }
        for (int c = 0; c < sectors; ++c) {
          inst.allowed(u, c) = row[c];
        }
      }
      for (const std::string& q : vector_field<std::string>(rec, "qos", nu)) {
        inst.qos.push_back(parse_qos(q));
      }
      inst.live = vector_field<bool>(rec, "live", nu);
      inst.sector_power_dbm = vector_field<double>(rec, "sector_power_dbm", ns);
      s.bounds.alpha_min_bps = vector_field<double>(rec, "alpha_min_bps", nu);
      s.bounds.psi_max_dbm = vector_field<double>(rec, "psi_max_dbm", ns);
      s.label = vector_field<int>(rec, "label", nu);
      for (int u = 0; u < users; ++u) {
        if (s.label[u] < 0 || s.label[u] >= sectors || !inst.allowed(u, s.label[u])) {
          throw DatasetSchemaError("label of user " + std::to_string(u) + " is not an allowed sector");
        }
      }
      s.objective_bps = rec.at("objective").get<double>();
      s.feasible = rec.at("feasible").get<bool>();
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DatasetSchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DatasetSchemaError& e) {
      throw DatasetSchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (header_out != nullptr) {
    *header_out = header;
  }
  return samples;
}

}  // namespace icsim
