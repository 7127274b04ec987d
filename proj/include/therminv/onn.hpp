#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "therminv/linalg.hpp"
#include "therminv/matrix.hpp"

namespace therminv {

struct NotSymmetric : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPositiveScale : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Oscillator network parameters: coupling matrix J (symmetric, zero
/// diagonal), per-oscillator injection strengths Ks, global coupling
/// strength K and generalized noise Kn (inverse-temperature analog).
struct OnnConfig {
  std::size_t dim = 0;
  SquareMatrix coupling;          // J
  std::vector<double> injection;  // Ks
  double strength = 0.0;          // K
  double noise = 0.0;             // Kn

  /// True when some injection strength is negative: the single-well shape
  /// of the energy is not guaranteed then (accepted with a warning).
  bool has_negative_injection() const {
    for (double v : injection)
      if (v < 0.0) return true;
    return false;
  }
};

inline void validate_config(const OnnConfig& cfg) {
  if (cfg.dim == 0) throw std::invalid_argument("OnnConfig: dim must be >= 1");
  if (cfg.coupling.dim() != cfg.dim || cfg.injection.size() != cfg.dim)
    throw std::invalid_argument("OnnConfig: inconsistent dimensions");
  if (!(cfg.strength > 0.0)) throw std::invalid_argument("OnnConfig: K must be > 0");
  if (!(cfg.noise > 0.0)) throw std::invalid_argument("OnnConfig: Kn must be > 0");
  if (!cfg.coupling.all_finite())
    throw std::invalid_argument("OnnConfig: non-finite coupling entry");
  for (std::size_t i = 0; i < cfg.dim; ++i) {
    if (cfg.coupling(i, i) != 0.0)
      throw std::invalid_argument("OnnConfig: coupling diagonal must be zero");
    if (!std::isfinite(cfg.injection[i]))
      throw std::invalid_argument("OnnConfig: non-finite injection entry");
  }
  if (max_asymmetry(cfg.coupling) > 1e-10 * std::max(max_abs(cfg.coupling), 1e-300))
    throw std::invalid_argument("OnnConfig: coupling matrix must be symmetric");
}

/// Maps a symmetric matrix onto network parameters:
///   J_ij = -A_ij (i != j),  Ks_i = K * (row sum of A).
/// The diagonal of A is recovered through the injection term.
inline OnnConfig map_matrix_to_onn(const SquareMatrix& a, double strength, double noise,
                                   double symmetry_tol = 1e-10) {
  if (!(strength > 0.0)) throw std::invalid_argument("map_matrix_to_onn: K must be > 0");
  if (!(noise > 0.0)) throw std::invalid_argument("map_matrix_to_onn: Kn must be > 0");
  const SpdReport rep = is_spd(a, symmetry_tol);
  if (!rep.symmetric)
    throw NotSymmetric("map_matrix_to_onn: asymmetry " + std::to_string(rep.asymmetry));

  const std::size_t d = a.dim();
  OnnConfig cfg;
  cfg.dim = d;
  cfg.coupling = SquareMatrix(d);
  cfg.injection.resize(d);
  cfg.strength = strength;
  cfg.noise = noise;
  for (std::size_t i = 0; i < d; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row_sum += a(i, j);
      if (i != j) cfg.coupling(i, j) = -a(i, j);
    }
    cfg.injection[i] = strength * row_sum;
  }
  return cfg;
}

/// Exact right-inverse of map_matrix_to_onn:
///   A_ij = -J_ij (i != j),  A_ii = sum_{j != i} J_ij + Ks_i / K.
inline SquareMatrix map_onn_to_matrix(const OnnConfig& cfg) {
  const std::size_t d = cfg.dim;
  SquareMatrix a(d);
  for (std::size_t i = 0; i < d; ++i) {
    double coupling_sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (i == j) continue;
      coupling_sum += cfg.coupling(i, j);
      a(i, j) = -cfg.coupling(i, j);
    }
    a(i, i) = coupling_sum + cfg.injection[i] / cfg.strength;
  }
  return a;
}

/// Scale rule K = 1000 / scale, with scale the largest entry magnitude of A.
inline double choose_k(double scale) {
  if (!(scale > 0.0)) throw NonPositiveScale("choose_k: scale must be > 0");
  return 1000.0 / scale;
}

inline void check_phase_dim(const OnnConfig& cfg, const PhaseState& phi) {
  if (phi.size() != cfg.dim)
    throw std::invalid_argument("phase vector does not match config dimension");
}

/// Network energy
///   E(phi) = -(K/2) sum_ij J_ij cos(phi_i - phi_j) - sum_i Ks_i cos(phi_i).
inline double onn_energy(const OnnConfig& cfg, const PhaseState& phi) {
  check_phase_dim(cfg, phi);
  const std::size_t d = cfg.dim;
  double coupling_term = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) coupling_term += cfg.coupling(i, j) * std::cos(phi[i] - phi[j]);
  double injection_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) injection_term += cfg.injection[i] * std::cos(phi[i]);
  return -0.5 * cfg.strength * coupling_term - injection_term;
}

/// dE/dphi_i = K sum_j J_ij sin(phi_i - phi_j) + Ks_i sin(phi_i).
inline std::vector<double> onn_energy_gradient(const OnnConfig& cfg, const PhaseState& phi) {
  check_phase_dim(cfg, phi);
  const std::size_t d = cfg.dim;
  std::vector<double> g(d);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) acc += cfg.coupling(i, j) * std::sin(phi[i] - phi[j]);
    g[i] = cfg.strength * acc + cfg.injection[i] * std::sin(phi[i]);
  }
  return g;
}

/// Kuramoto drift; identically the negative energy gradient.
inline std::vector<double> kuramoto_drift(const OnnConfig& cfg, const PhaseState& phi) {
  std::vector<double> g = onn_energy_gradient(cfg, phi);
  for (double& v : g) v = -v;
  return g;
}

/// Small-phase drift -K A phi with A recovered from the configuration.
inline std::vector<double> linearized_drift(const OnnConfig& cfg, const PhaseState& phi) {
  check_phase_dim(cfg, phi);
  const SquareMatrix a = map_onn_to_matrix(cfg);
  std::vector<double> v = mat_vec(a, phi);
  for (double& x : v) x *= -cfg.strength;
  return v;
}

}  // namespace therminv
