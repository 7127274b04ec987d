#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "therminv/dynamics.hpp"
#include "therminv/energy.hpp"
#include "therminv/onn.hpp"

namespace therminv {

using json = nlohmann::ordered_json;

inline json matrix_to_json(const SquareMatrix& m) {
  return json(m.entries());
}

/// Network configuration document: {dim, J (row-major), Ks, K, Kn}.
inline json onn_config_to_json(const OnnConfig& cfg) {
  json j;
  j["dim"] = cfg.dim;
  j["J"] = cfg.coupling.entries();
  j["Ks"] = cfg.injection;
  j["K"] = cfg.strength;
  j["Kn"] = cfg.noise;
  return j;
}

inline OnnConfig onn_config_from_json(const nlohmann::json& j) {
  OnnConfig cfg;
  cfg.dim = j.at("dim").get<std::size_t>();
  cfg.coupling = SquareMatrix(cfg.dim, j.at("J").get<std::vector<double>>());
  cfg.injection = j.at("Ks").get<std::vector<double>>();
  cfg.strength = j.at("K").get<double>();
  cfg.noise = j.at("Kn").get<double>();
  validate_config(cfg);
  return cfg;
}

inline OnnConfig load_onn_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("bad config file " + path + ": " + e.what());
  }
  return onn_config_from_json(j);
}

inline void save_onn_config_file(const std::string& path, const OnnConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << onn_config_to_json(cfg).dump(2) << "\n";
}

inline json energy_inversion_to_json(const EnergyInversion& r) {
  json j;
  j["dim"] = r.inverse.dim();
  j["method"] = "energy";
  j["estimated_inverse"] = r.inverse.entries();
  j["exact_inverse"] = r.exact_inverse.entries();
  j["relative_error_pct"] = r.relative_error_pct;
  j["boundary_mass"] = r.boundary_mass;
  j["boundary_warning"] = r.boundary_warning;
  j["min_sigma_cells"] = r.min_sigma_cells;
  return j;
}

inline json dynamics_inversion_to_json(const DynamicsInversion& r) {
  json j;
  j["dim"] = r.inverse.dim();
  j["method"] = "dynamics";
  j["estimated_inverse"] = r.inverse.entries();
  j["exact_inverse"] = r.exact_inverse.entries();
  j["relative_error_pct"] = r.relative_error_pct;
  j["error_entries_skipped"] = r.error_entries_skipped;
  j["max_abs_phase"] = r.max_abs_phase;
  j["mean_norm"] = r.mean_norm;
  j["effective_samples"] = r.effective_samples;
  j["n_samples"] = r.stats.n_samples;
  j["dt"] = r.dt;
  j["total_time"] = r.stats.total_time;
  j["small_phase_warning"] = r.small_phase_warning;
  j["negative_injection"] = r.negative_injection;
  return j;
}

}  // namespace therminv
