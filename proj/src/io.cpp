#include "randtree/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "randtree/errors.hpp"
#include "randtree/kernels.hpp"

namespace randtree {

namespace {

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].empty()) {
    throw ConfigError(std::string("rates: '") + key + "' must be a nonempty array of rows");
  }
  const auto& rows = j[key];
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ConfigError(std::string("rates: '") + key + "' must be square");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ConfigError(std::string("rates: '") + key + "' entries must be numbers");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

nlohmann::json estimate_json(const Estimate& e) {
  return {{"value", number(e.value)},
          {"se", number(e.se)},
          {"ci_low", number(e.ci_low())},
          {"ci_high", number(e.ci_high())}};
}

}  // namespace

RateMatrices rates_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("rates: document must be a JSON object");
  RateMatrices r;
  r.lambda = matrix_from_json(doc, "lambda");
  r.mu = matrix_from_json(doc, "mu");
  if (doc.contains("classes")) {
    if (!doc["classes"].is_array()) throw ConfigError("rates: 'classes' must be an array");
    for (const auto& c : doc["classes"]) r.classes.push_back(c.is_string() ? c.get<std::string>() : c.dump());
  } else {
    for (Eigen::Index i = 0; i < r.lambda.rows(); ++i) r.classes.push_back(std::to_string(i));
  }
  r.validate();
  return r;
}

RateMatrices load_rates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rates file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("rates file " + path.string() + ": " + e.what());
  }
  return rates_from_json(doc);
}

nlohmann::json result_to_json(const ExperimentResult& r) {
  nlohmann::json out;
  out["verdict"] = r.verdict;
  out["statistical_pass"] = r.statistical_pass;
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [k, v] : r.values) values[k] = number(v);
  out["values"] = values;
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = estimate_json(v);
  out["metrics"] = metrics;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : r.comparisons) {
    comps.push_back({{"name", c.name},
                     {"theory", number(c.theory)},
                     {"simulated", estimate_json(c.simulated)},
                     {"z", number(c.z)},
                     {"pass", c.pass}});
  }
  out["comparisons"] = comps;
  nlohmann::json dists = nlohmann::json::array();
  for (const auto& d : r.distributions) {
    dists.push_back({{"name", d.name},
                     {"tv", number(d.tv)},
                     {"ks_statistic", number(d.ks_statistic)},
                     {"ks_p_value", number(d.ks_p_value)},
                     {"support", d.support},
                     {"pass", d.pass}});
  }
  out["distributions"] = dists;
  out["warnings"] = r.warnings;
  nlohmann::json meta{{"kind", r.kind},
                      {"seed", r.seed},
                      {"replicas", r.replicas},
                      {"events", r.events},
                      {"cap_hits", r.cap_hits},
                      {"simd", std::string(kernels::isa_name(kernels::active_isa()))}};
  if (r.record_timing) meta["wall_seconds"] = r.wall_seconds;
  out["meta"] = meta;
  return out;
}

std::string table_csv(const Table& t) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "");
      if (std::isfinite(row[i])) {
        out << row[i];
      } else {
        out << "nan";
      }
    }
    out << '\n';
  }
  return out.str();
}

void write_result(const ExperimentResult& result, const std::filesystem::path& prefix) {
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  const auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << text;
  };
  write(prefix.string() + ".json", result_to_json(result).dump(2) + "\n");
  for (const auto& t : result.tables) write(prefix.string() + "_" + t.name + ".csv", table_csv(t));
}

}  // namespace randtree
