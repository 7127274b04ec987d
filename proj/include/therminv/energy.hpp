#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "therminv/linalg.hpp"
#include "therminv/matrix.hpp"
#include "therminv/onn.hpp"

namespace therminv {

struct GridTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateDensity : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  std::size_t points_per_dim = 100;
  double window_halfwidth = std::numbers::pi;  // grid spans [-w, w] per dimension
  std::size_t cell_cap = 100'000'000;
};

/// Normalized Boltzmann masses exp(-Kn (E - E_min)) / Z on the midpoint grid.
struct BoltzmannGrid {
  GridSpec spec;
  std::size_t dim = 0;
  std::vector<double> axis;     // cell-center coordinate per grid index
  std::vector<double> density;  // points_per_dim^dim masses, sum = 1
};

namespace detail {

inline std::size_t checked_cell_count(std::size_t points, std::size_t dim,
                                      std::size_t cap) {
  double cells = 1.0;
  for (std::size_t k = 0; k < dim; ++k) cells *= static_cast<double>(points);
  if (cells > static_cast<double>(cap))
    throw GridTooLarge("grid of " + std::to_string(points) + "^" + std::to_string(dim) +
                       " cells exceeds cap " + std::to_string(cap));
  std::size_t n = 1;
  for (std::size_t k = 0; k < dim; ++k) n *= points;
  return n;
}

// Odometer over d digits in [0, points).
inline bool next_cell(std::vector<std::size_t>& idx, std::size_t points) {
  for (std::size_t k = idx.size(); k-- > 0;) {
    if (++idx[k] < points) return true;
    idx[k] = 0;
  }
  return false;
}

}  // namespace detail

inline BoltzmannGrid boltzmann_grid(const OnnConfig& cfg, const GridSpec& spec) {
  validate_config(cfg);
  if (spec.points_per_dim < 3)
    throw std::invalid_argument("boltzmann_grid: points_per_dim must be >= 3");
  if (!(spec.window_halfwidth > 0.0))
    throw std::invalid_argument("boltzmann_grid: window_halfwidth must be > 0");
  const std::size_t d = cfg.dim;
  const std::size_t points = spec.points_per_dim;
  const std::size_t n_cells = detail::checked_cell_count(points, d, spec.cell_cap);

  BoltzmannGrid grid;
  grid.spec = spec;
  grid.dim = d;
  grid.axis.resize(points);
  const double h = 2.0 * spec.window_halfwidth / static_cast<double>(points);
  for (std::size_t k = 0; k < points; ++k)
    grid.axis[k] = -spec.window_halfwidth + (static_cast<double>(k) + 0.5) * h;

  // cos(phi_i - phi_j) expands over per-axis tables; no trig in the cell loop.
  std::vector<double> cos_tab(points), sin_tab(points);
  for (std::size_t k = 0; k < points; ++k) {
    cos_tab[k] = std::cos(grid.axis[k]);
    sin_tab[k] = std::sin(grid.axis[k]);
  }

  grid.density.resize(n_cells);
  std::vector<std::size_t> idx(d, 0);
  double e_min = std::numeric_limits<double>::infinity();
  std::size_t cell = 0;
  do {
    double coupling_term = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j)
        coupling_term += cfg.coupling(i, j) *
                         (cos_tab[idx[i]] * cos_tab[idx[j]] + sin_tab[idx[i]] * sin_tab[idx[j]]);
    double injection_term = 0.0;
    for (std::size_t i = 0; i < d; ++i) injection_term += cfg.injection[i] * cos_tab[idx[i]];
    const double e = -cfg.strength * coupling_term - injection_term;
    grid.density[cell++] = e;
    e_min = std::min(e_min, e);
  } while (detail::next_cell(idx, points));

  // Shift by E_min before exponentiating: Kn*E alone would underflow.
  double z = 0.0, z_comp = 0.0;
  for (double& v : grid.density) {
    v = std::exp(-cfg.noise * (v - e_min));
    const double y = v - z_comp;
    const double t = z + y;
    z_comp = (t - z) - y;
    z = t;
  }
  if (!(z > 0.0) || !std::isfinite(z))
    throw DegenerateDensity("boltzmann_grid: normalization sum is not positive finite");
  for (double& v : grid.density) v /= z;
  return grid;
}

/// Raw second moment over cell centers: S_ij = sum_cells mass * phi_i * phi_j.
inline CovarianceMatrix covariance_from_grid(const BoltzmannGrid& grid) {
  const std::size_t d = grid.dim;
  const std::size_t points = grid.axis.size();
  std::vector<double> acc(d * d, 0.0), comp(d * d, 0.0);
  std::vector<std::size_t> idx(d, 0);
  std::size_t cell = 0;
  do {
    const double mass = grid.density[cell++];
    for (std::size_t i = 0; i < d; ++i) {
      const double pi = grid.axis[idx[i]];
      for (std::size_t j = i; j < d; ++j) {
        const double y = mass * pi * grid.axis[idx[j]] - comp[i * d + j];
        const double t = acc[i * d + j] + y;
        comp[i * d + j] = (t - acc[i * d + j]) - y;
        acc[i * d + j] = t;
      }
    }
  } while (detail::next_cell(idx, points));
  SquareMatrix m(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      m(i, j) = acc[i * d + j];
      m(j, i) = acc[i * d + j];
    }
  return CovarianceMatrix(std::move(m));
}

/// Total mass in the outermost cell layer; large values mean the window
/// truncates the distribution.
inline double boundary_mass(const BoltzmannGrid& grid) {
  const std::size_t d = grid.dim;
  const std::size_t points = grid.axis.size();
  double acc = 0.0, comp = 0.0;
  std::vector<std::size_t> idx(d, 0);
  std::size_t cell = 0;
  do {
    bool boundary = false;
    for (std::size_t k = 0; k < d; ++k)
      if (idx[k] == 0 || idx[k] + 1 == points) {
        boundary = true;
        break;
      }
    if (boundary) {
      const double y = grid.density[cell] - comp;
      const double t = acc + y;
      comp = (t - acc) - y;
      acc = t;
    }
    ++cell;
  } while (detail::next_cell(idx, points));
  return acc;
}

struct EnergyInversion {
  SquareMatrix inverse;        // Kn K Sigma from the grid
  SquareMatrix exact_inverse;  // Gauss-Jordan oracle
  CovarianceMatrix covariance;
  double relative_error_pct = 0.0;
  std::size_t error_entries_skipped = 0;
  double boundary_mass = 0.0;
  bool boundary_warning = false;  // boundary mass > 1e-6
  double min_sigma_cells = 0.0;   // narrowest theoretical std dev / cell width
};

/// Boltzmann-grid inversion: A^{-1} = Kn K Sigma_s with Sigma_s integrated
/// from the equilibrium density of the mapped network.
inline EnergyInversion invert_via_energy(const SquareMatrix& a, double strength,
                                         double noise, const GridSpec& spec = {}) {
  const OnnConfig cfg = map_matrix_to_onn(a, strength, noise);
  const BoltzmannGrid grid = boltzmann_grid(cfg, spec);

  EnergyInversion out;
  out.covariance = covariance_from_grid(grid);
  out.inverse = (noise * strength) * out.covariance.matrix();
  out.exact_inverse = invert_exact(a);
  out.relative_error_pct = relative_error(out.exact_inverse, out.inverse);
  out.boundary_mass = boundary_mass(grid);
  out.boundary_warning = out.boundary_mass > 1e-6;

  const std::vector<double> eig = symmetric_eigenvalues(a);
  const double h = 2.0 * spec.window_halfwidth / static_cast<double>(spec.points_per_dim);
  out.min_sigma_cells = 1.0 / (std::sqrt(noise * strength * eig.back()) * h);
  return out;
}

}  // namespace therminv
