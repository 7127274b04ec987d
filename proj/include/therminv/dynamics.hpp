#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "therminv/linalg.hpp"
#include "therminv/matrix.hpp"
#include "therminv/onn.hpp"
#include "therminv/rng.hpp"

namespace therminv {

struct NonPositiveNoiseParameter : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Diverged : std::runtime_error {
  Diverged(std::uint64_t step, double value)
      : std::runtime_error("trajectory diverged at step " + std::to_string(step) +
                           " (|phi| = " + std::to_string(value) + ")"),
        step_index(step) {}
  std::uint64_t step_index;
};
struct UnstableParameters : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SdeMode { kFullKuramoto, kLinearOu };

/// One Euler-Maruyama run: dt <= 0 requests the automatic step rule.
struct SdeRunSpec {
  double dt = 0.0;
  std::uint64_t n_steps = 5'000'000;
  double burn_in_fraction = 0.1;
  std::uint64_t sample_stride = 1;
  std::uint64_t seed = 0;
  SdeMode mode = SdeMode::kFullKuramoto;
  PhaseState initial_phase;  // empty = zero vector
  std::size_t n_batches = 32;
};

/// Diffusion amplitude L = sqrt(2/Kn); the diffusion matrix is L * identity.
inline double noise_amplitude(double noise_parameter) {
  if (!(noise_parameter > 0.0))
    throw NonPositiveNoiseParameter("noise_amplitude: Kn must be > 0");
  return std::sqrt(2.0 / noise_parameter);
}

/// Automatic step size 0.02 / (K * max row sum of |A|). The row sum bounds
/// the spectral radius of KA, so dt*K*lambda stays well below the explicit
/// Euler stability limit and the covariance discretization bias stays below
/// the sampling noise at the default run lengths.
inline double auto_dt(const SquareMatrix& a, double strength) {
  return 0.02 / (strength * inf_norm(a));
}

inline double resolve_dt(const OnnConfig& cfg, double requested_dt) {
  if (requested_dt > 0.0) return requested_dt;
  return auto_dt(map_onn_to_matrix(cfg), cfg.strength);
}

/// One explicit Euler-Maruyama step. dw carries d independent N(0, dt)
/// increments supplied by the caller.
inline PhaseState step(const OnnConfig& cfg, const PhaseState& phi, double dt,
                       std::span<const double> dw, SdeMode mode) {
  check_phase_dim(cfg, phi);
  if (dw.size() != cfg.dim) throw std::invalid_argument("step: bad increment size");
  const std::vector<double> drift = (mode == SdeMode::kFullKuramoto)
                                        ? kuramoto_drift(cfg, phi)
                                        : linearized_drift(cfg, phi);
  const double amp = noise_amplitude(cfg.noise);
  PhaseState next(cfg.dim);
  for (std::size_t i = 0; i < cfg.dim; ++i) next[i] = phi[i] + drift[i] * dt + amp * dw[i];
  return next;
}

struct TrajectoryStats {
  std::uint64_t n_samples = 0;
  std::vector<double> mean;
  CovarianceMatrix second_moment;
  double min_abs_phase = 0.0;
  double max_abs_phase = 0.0;
  // batch-means standard error per entry of the second moment
  SquareMatrix batch_standard_error;
  std::size_t n_batches = 0;
  double dt = 0.0;
  double total_time = 0.0;
};

/// Integrates the SDE and accumulates stationary statistics in one pass
/// (Kahan-compensated; trajectories are never stored). Deterministic in
/// (config, spec) including the seed.
inline TrajectoryStats simulate(const OnnConfig& cfg, const SdeRunSpec& spec) {
  validate_config(cfg);
  if (spec.n_steps == 0) throw std::invalid_argument("simulate: n_steps must be >= 1");
  if (!(spec.burn_in_fraction >= 0.0 && spec.burn_in_fraction < 1.0))
    throw std::invalid_argument("simulate: burn_in_fraction must be in [0, 1)");
  if (spec.sample_stride == 0) throw std::invalid_argument("simulate: sample_stride >= 1");

  const std::size_t d = cfg.dim;
  const double dt = resolve_dt(cfg, spec.dt);
  const SquareMatrix a = map_onn_to_matrix(cfg);

  // Explicit-Euler stability precheck with the cheap spectral bound.
  const double stiffness = dt * cfg.strength * inf_norm(a);
  if (!(stiffness < 2.0))
    throw UnstableParameters("simulate: dt * K * max row sum |A| = " +
                             std::to_string(stiffness) + " >= 2");

  PhaseState phi(d, 0.0);
  if (!spec.initial_phase.empty()) {
    if (spec.initial_phase.size() != d)
      throw std::invalid_argument("simulate: initial_phase dimension mismatch");
    phi = spec.initial_phase;
  }

  const double amp_dw = noise_amplitude(cfg.noise) * std::sqrt(dt);
  GaussianStream rng(spec.seed);

  const std::uint64_t n_burn =
      static_cast<std::uint64_t>(spec.burn_in_fraction * static_cast<double>(spec.n_steps));
  const std::uint64_t n_retained = spec.n_steps - n_burn;
  const std::uint64_t n_acc = (n_retained + spec.sample_stride - 1) / spec.sample_stride;
  const std::size_t n_batches = static_cast<std::size_t>(
      std::min<std::uint64_t>(spec.n_batches == 0 ? 1 : spec.n_batches, n_acc));

  std::vector<double> acc(d * d, 0.0), comp(d * d, 0.0);
  std::vector<double> macc(d, 0.0), mcomp(d, 0.0);
  std::vector<double> batch_acc(n_batches * d * d, 0.0);
  std::vector<std::uint64_t> batch_n(n_batches, 0);

  // Full-Kuramoto drift via per-step sin/cos tables:
  //   drift_i = -K (s_i (J c)_i - c_i (J s)_i) - Ks_i s_i.
  std::vector<double> sin_t(d), cos_t(d), jc(d), js(d);
  // Linear mode: phi' = phi + (M phi) with M = -dt K A precomputed.
  SquareMatrix m_lin(d);
  if (spec.mode == SdeMode::kLinearOu)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) m_lin(i, j) = -dt * cfg.strength * a(i, j);

  double min_mag = std::numeric_limits<double>::infinity();
  double max_mag = 0.0;
  std::uint64_t acc_index = 0;

  for (std::uint64_t t = 0; t < spec.n_steps; ++t) {
    if (spec.mode == SdeMode::kFullKuramoto) {
      for (std::size_t i = 0; i < d; ++i) {
        sin_t[i] = std::sin(phi[i]);
        cos_t[i] = std::cos(phi[i]);
      }
      for (std::size_t i = 0; i < d; ++i) {
        double accc = 0.0, accs = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          accc += cfg.coupling(i, j) * cos_t[j];
          accs += cfg.coupling(i, j) * sin_t[j];
        }
        jc[i] = accc;
        js[i] = accs;
      }
      for (std::size_t i = 0; i < d; ++i) {
        const double drift =
            -cfg.strength * (sin_t[i] * jc[i] - cos_t[i] * js[i]) - cfg.injection[i] * sin_t[i];
        phi[i] += drift * dt + amp_dw * rng.gaussian();
      }
    } else {
      for (std::size_t i = 0; i < d; ++i) {
        double mv = 0.0;
        for (std::size_t j = 0; j < d; ++j) mv += m_lin(i, j) * phi[j];
        jc[i] = mv;  // reuse as scratch
      }
      for (std::size_t i = 0; i < d; ++i) phi[i] += jc[i] + amp_dw * rng.gaussian();
    }

    for (std::size_t i = 0; i < d; ++i) {
      const double mag = std::fabs(phi[i]);
      if (mag > 1e3) throw Diverged(t, mag);
      min_mag = std::min(min_mag, mag);
      max_mag = std::max(max_mag, mag);
    }

    if (t < n_burn) continue;
    const std::uint64_t retained = t - n_burn;
    if (retained % spec.sample_stride != 0) continue;

    const std::size_t b = static_cast<std::size_t>(
        acc_index * static_cast<std::uint64_t>(n_batches) / n_acc);
    ++batch_n[b];
    ++acc_index;
    double* bacc = batch_acc.data() + b * d * d;
    for (std::size_t i = 0; i < d; ++i) {
      const double ym = phi[i] - mcomp[i];
      const double tm = macc[i] + ym;
      mcomp[i] = (tm - macc[i]) - ym;
      macc[i] = tm;
      for (std::size_t j = i; j < d; ++j) {
        const double prod = phi[i] * phi[j];
        const double y = prod - comp[i * d + j];
        const double tt = acc[i * d + j] + y;
        comp[i * d + j] = (tt - acc[i * d + j]) - y;
        acc[i * d + j] = tt;
        bacc[i * d + j] += prod;
      }
    }
  }

  TrajectoryStats stats;
  stats.n_samples = acc_index;
  stats.dt = dt;
  stats.total_time = dt * static_cast<double>(spec.n_steps);
  stats.min_abs_phase = min_mag;
  stats.max_abs_phase = max_mag;
  stats.mean.resize(d);
  const double inv_n = 1.0 / static_cast<double>(acc_index);
  for (std::size_t i = 0; i < d; ++i) stats.mean[i] = macc[i] * inv_n;

  SquareMatrix sm(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      sm(i, j) = acc[i * d + j] * inv_n;
      sm(j, i) = sm(i, j);
    }
  stats.second_moment = CovarianceMatrix(std::move(sm));

  stats.n_batches = n_batches;
  stats.batch_standard_error = SquareMatrix(d);
  if (n_batches >= 2) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        double mean_bm = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b)
          mean_bm += batch_acc[b * d * d + i * d + j] / static_cast<double>(batch_n[b]);
        mean_bm /= static_cast<double>(n_batches);
        double var = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
          const double bm = batch_acc[b * d * d + i * d + j] / static_cast<double>(batch_n[b]);
          var += (bm - mean_bm) * (bm - mean_bm);
        }
        var /= static_cast<double>(n_batches - 1);
        const double se = std::sqrt(var / static_cast<double>(n_batches));
        stats.batch_standard_error(i, j) = se;
        stats.batch_standard_error(j, i) = se;
      }
  }
  return stats;
}

struct DynamicsInversion {
  SquareMatrix inverse;        // Kn K * sampled second moment
  SquareMatrix exact_inverse;  // Gauss-Jordan oracle
  TrajectoryStats stats;
  double relative_error_pct = 0.0;
  std::size_t error_entries_skipped = 0;
  double max_abs_phase = 0.0;
  double mean_norm = 0.0;
  double effective_samples = 0.0;
  double dt = 0.0;
  bool small_phase_warning = false;   // max |phi| > 0.3 rad
  bool negative_injection = false;
};

/// SDE-sampling inversion: map A onto the network, integrate, and rescale
/// the stationary second moment by Kn K.
inline DynamicsInversion invert_via_dynamics(const SquareMatrix& a, double strength,
                                             double noise, SdeRunSpec spec) {
  const OnnConfig cfg = map_matrix_to_onn(a, strength, noise);
  spec.dt = resolve_dt(cfg, spec.dt);
  const TrajectoryStats stats = simulate(cfg, spec);

  DynamicsInversion out;
  out.inverse = (noise * strength) * stats.second_moment.matrix();
  out.exact_inverse = invert_exact(a);
  const RelativeErrorSummary err = relative_error_skipping(out.exact_inverse, out.inverse);
  out.relative_error_pct = err.percent;
  out.error_entries_skipped = err.skipped;
  out.max_abs_phase = stats.max_abs_phase;
  double norm2 = 0.0;
  for (double v : stats.mean) norm2 += v * v;
  out.mean_norm = std::sqrt(norm2);

  const std::vector<double> eig = symmetric_eigenvalues(a);
  const double autocorr_time = 1.0 / (strength * eig.front());
  const double sample_interval = static_cast<double>(spec.sample_stride) * spec.dt;
  out.effective_samples =
      static_cast<double>(stats.n_samples) / std::max(1.0, autocorr_time / sample_interval);
  out.dt = spec.dt;
  out.small_phase_warning = stats.max_abs_phase > 0.3;
  out.negative_injection = cfg.has_negative_injection();
  out.stats = std::move(stats);
  return out;
}

struct TimeToSolutionReport {
  double relaxation_time = 0.0;       // 1 / (K lambda_min)
  double burn_in_time = 0.0;          // discarded simulated time
  bool burn_in_sufficient = false;    // burn-in >= 5 relaxation times
  double autocorrelation_time = 0.0;  // slowest-mode correlation time
  double effective_samples = 0.0;
  double total_time = 0.0;
};

/// Synchronization (relaxation) and sampling budgets implied by a run spec,
/// from the exact spectrum of the small mapped matrix.
inline TimeToSolutionReport time_to_solution_estimate(const OnnConfig& cfg,
                                                      const SdeRunSpec& spec) {
  validate_config(cfg);
  const SquareMatrix a = map_onn_to_matrix(cfg);
  const std::vector<double> eig = symmetric_eigenvalues(a);
  const double dt = resolve_dt(cfg, spec.dt);

  TimeToSolutionReport rep;
  rep.relaxation_time = 1.0 / (cfg.strength * eig.front());
  const std::uint64_t n_burn =
      static_cast<std::uint64_t>(spec.burn_in_fraction * static_cast<double>(spec.n_steps));
  rep.burn_in_time = static_cast<double>(n_burn) * dt;
  rep.burn_in_sufficient = rep.burn_in_time >= 5.0 * rep.relaxation_time;
  rep.autocorrelation_time = rep.relaxation_time;
  const std::uint64_t n_retained = spec.n_steps - n_burn;
  const std::uint64_t n_acc = (n_retained + spec.sample_stride - 1) / spec.sample_stride;
  const double sample_interval = static_cast<double>(spec.sample_stride) * dt;
  rep.effective_samples = static_cast<double>(n_acc) /
                          std::max(1.0, rep.autocorrelation_time / sample_interval);
  rep.total_time = static_cast<double>(spec.n_steps) * dt;
  return rep;
}

}  // namespace therminv
