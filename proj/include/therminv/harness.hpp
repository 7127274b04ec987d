#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "therminv/dynamics.hpp"
#include "therminv/energy.hpp"
#include "therminv/io.hpp"
#include "therminv/linalg.hpp"
#include "therminv/onn.hpp"
#include "therminv/rng.hpp"

namespace therminv {

/// Shortest round-trip decimal form; the stable text representation used in
/// every emitted file.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// FNV-1a over dimension and entry bit patterns; the matrix descriptor.
inline std::uint64_t matrix_hash(const SquareMatrix& m) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto mix = [&h](std::uint64_t x) {
    for (int b = 0; b < 8; ++b) {
      h ^= (x >> (8 * b)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  };
  mix(m.dim());
  for (double v : m.entries()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    mix(bits);
  }
  return h;
}

/// One experiment cell, self-describing: the fields are sufficient to re-run
/// the cell and reproduce rel_err_pct bit-exactly.
struct ResultRecord {
  std::string routine;
  std::size_t dim = 0;
  double scale = 0.0;
  double strength = 0.0;  // K
  double noise = 0.0;     // Kn
  std::uint64_t n_steps = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::string method;  // "dynamics" | "energy"
  double rel_err_pct = 0.0;
  double max_phase = 0.0;
  std::vector<std::string> flags;
  std::uint64_t matrix_hash = 0;
};

inline bool double_eq_nan(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

inline bool operator==(const ResultRecord& a, const ResultRecord& b) {
  return a.routine == b.routine && a.dim == b.dim && double_eq_nan(a.scale, b.scale) &&
         double_eq_nan(a.strength, b.strength) && double_eq_nan(a.noise, b.noise) &&
         a.n_steps == b.n_steps && double_eq_nan(a.dt, b.dt) && a.seed == b.seed &&
         a.method == b.method && double_eq_nan(a.rel_err_pct, b.rel_err_pct) &&
         double_eq_nan(a.max_phase, b.max_phase) && a.flags == b.flags &&
         a.matrix_hash == b.matrix_hash;
}

// --- emission ---------------------------------------------------------------
// Timing is reported out of band (stderr summaries); the emitted files must be
// byte-identical across reruns, so the wall_s column is a fixed placeholder.

inline constexpr const char* kResultCsvHeader =
    "routine,dim,scale,K,Kn,Ns,dt,seed,method,rel_err_pct,max_phase,wall_s,flags";

inline std::string join_flags(const std::vector<std::string>& flags) {
  std::string s;
  for (const auto& f : flags) {
    if (!s.empty()) s += ';';
    s += f;
  }
  return s;
}

inline void emit_results_csv(std::ostream& out, std::span<const ResultRecord> records) {
  out << kResultCsvHeader << "\n";
  for (const auto& r : records) {
    out << r.routine << ',' << r.dim << ',' << format_double(r.scale) << ','
        << format_double(r.strength) << ',' << format_double(r.noise) << ',' << r.n_steps
        << ',' << format_double(r.dt) << ',' << r.seed << ',' << r.method << ','
        << format_double(r.rel_err_pct) << ',' << format_double(r.max_phase) << ",0,"
        << join_flags(r.flags) << "\n";
  }
}

inline json result_record_to_json(const ResultRecord& r) {
  json j;
  j["routine"] = r.routine;
  j["dim"] = r.dim;
  j["scale"] = r.scale;
  j["K"] = r.strength;
  j["Kn"] = r.noise;
  j["Ns"] = r.n_steps;
  j["dt"] = r.dt;
  j["seed"] = r.seed;
  j["method"] = r.method;
  j["rel_err_pct"] = r.rel_err_pct;
  j["max_phase"] = r.max_phase;
  j["wall_s"] = 0;
  j["flags"] = r.flags;
  j["matrix_hash"] = r.matrix_hash;
  return j;
}

inline ResultRecord result_record_from_json(const nlohmann::json& j) {
  ResultRecord r;
  r.routine = j.at("routine").get<std::string>();
  r.dim = j.at("dim").get<std::size_t>();
  const auto num = [&j](const char* key) {
    const auto& v = j.at(key);
    return v.is_null() ? std::nan("") : v.get<double>();
  };
  r.scale = num("scale");
  r.strength = num("K");
  r.noise = num("Kn");
  r.n_steps = j.at("Ns").get<std::uint64_t>();
  r.dt = num("dt");
  r.seed = j.at("seed").get<std::uint64_t>();
  r.method = j.at("method").get<std::string>();
  r.rel_err_pct = num("rel_err_pct");
  r.max_phase = num("max_phase");
  r.flags = j.at("flags").get<std::vector<std::string>>();
  r.matrix_hash = j.value("matrix_hash", std::uint64_t{0});
  return r;
}

inline void emit_results_json(std::ostream& out, std::span<const ResultRecord> records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(result_record_to_json(r));
  out << arr.dump(2) << "\n";
}

inline std::vector<ResultRecord> parse_results_json(std::istream& in) {
  nlohmann::json arr;
  in >> arr;
  std::vector<ResultRecord> out;
  for (const auto& j : arr) out.push_back(result_record_from_json(j));
  return out;
}

inline void emit_results_file(const std::string& path, const std::string& format,
                              std::span<const ResultRecord> records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write results file: " + path);
  if (format == "json")
    emit_results_json(out, records);
  else
    emit_results_csv(out, records);
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// Error histogram matching the batch-routine binning: fixed-width bins over
/// [0, 120)% and one overflow bin for everything at or above 120%.
struct Histogram {
  double bin_width = 5.0;
  double overflow_threshold = 120.0;
  std::vector<std::uint64_t> counts =
      std::vector<std::uint64_t>(static_cast<std::size_t>(120.0 / 5.0), 0);
  std::uint64_t overflow = 0;

  void add(double err_pct) {
    if (!(err_pct < overflow_threshold)) {  // catches NaN and inf as overflow
      ++overflow;
      return;
    }
    const auto b = static_cast<std::size_t>(std::max(err_pct, 0.0) / bin_width);
    ++counts[std::min(b, counts.size() - 1)];
  }

  std::uint64_t total() const {
    std::uint64_t t = overflow;
    for (auto c : counts) t += c;
    return t;
  }
};

inline void emit_histogram_csv(std::ostream& out,
                               std::span<const std::pair<double, Histogram>> by_noise) {
  const bool multi = by_noise.size() > 1;
  out << (multi ? "Kn,bin_lo,bin_hi,count" : "bin_lo,bin_hi,count") << "\n";
  for (const auto& [kn, h] : by_noise) {
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      if (multi) out << format_double(kn) << ',';
      out << format_double(static_cast<double>(b) * h.bin_width) << ','
          << format_double(static_cast<double>(b + 1) * h.bin_width) << ',' << h.counts[b]
          << "\n";
    }
    if (multi) out << format_double(kn) << ',';
    out << format_double(h.overflow_threshold) << ",inf," << h.overflow << "\n";
  }
}

// --- random matrix generation ------------------------------------------------

/// Wishart-style SPD draw: S = M M^T / d + 0.1 I with M uniform(-1,1),
/// rescaled so the largest entry magnitude equals `scale`. Draws whose
/// inverse has a near-zero entry are rejected (the entrywise error metric is
/// undefined there) and redrawn from an incremented sub-seed.
inline SquareMatrix random_spd_matrix(std::size_t dim, double scale, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("random_spd_matrix: dim must be >= 1");
  if (!(scale > 0.0)) throw NonPositiveScale("random_spd_matrix: scale must be > 0");
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    GaussianStream rng(derive_stream(seed, attempt));
    SquareMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    SquareMatrix s(dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i; j < dim; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) acc += m(i, k) * m(j, k);
        acc /= static_cast<double>(dim);
        if (i == j) acc += 0.1;
        s(i, j) = acc;
        s(j, i) = acc;
      }
    const double f = scale / max_abs(s);
    for (double& v : s.entries()) v *= f;

    const SquareMatrix inv = invert_exact(s);
    double min_entry = std::numeric_limits<double>::infinity();
    for (double v : inv.entries()) min_entry = std::min(min_entry, std::fabs(v));
    if (min_entry >= 1e-6 * inf_norm(inv)) return s;
  }
  throw std::runtime_error("random_spd_matrix: rejection bound (100 draws) exceeded");
}

// --- sweep machinery ----------------------------------------------------------

/// Runs fn(0..n-1) on up to `threads` workers. Cells must be independent;
/// results are stored by index so the outcome does not depend on scheduling.
inline void run_cells(std::size_t n, std::size_t threads,
                      const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  const std::size_t n_workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  std::vector<std::exception_ptr> errors(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct SweepOutcome {
  std::vector<ResultRecord> records;
  std::vector<double> cell_seconds;
  std::size_t failures = 0;
};

namespace detail {

inline std::vector<std::string> dynamics_flags(const DynamicsInversion& r) {
  std::vector<std::string> flags;
  if (r.small_phase_warning) flags.push_back("small_phase");
  if (r.negative_injection) flags.push_back("negative_injection");
  if (r.error_entries_skipped > 0)
    flags.push_back("skipped_entries:" + std::to_string(r.error_entries_skipped));
  return flags;
}

inline double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Runs one dynamics cell, catching per-cell failures into the record flags.
inline bool dynamics_cell(ResultRecord& rec, const SquareMatrix& a, double strength,
                          double noise, const SdeRunSpec& spec) {
  rec.dim = a.dim();
  rec.scale = max_abs(a);
  rec.strength = strength;
  rec.noise = noise;
  rec.n_steps = spec.n_steps;
  rec.seed = spec.seed;
  rec.method = "dynamics";
  rec.matrix_hash = matrix_hash(a);
  try {
    const DynamicsInversion r = invert_via_dynamics(a, strength, noise, spec);
    rec.dt = r.dt;
    rec.rel_err_pct = r.relative_error_pct;
    rec.max_phase = r.max_abs_phase;
    rec.flags = dynamics_flags(r);
    return true;
  } catch (const std::exception& e) {
    rec.dt = spec.dt;
    rec.rel_err_pct = std::nan("");
    rec.max_phase = std::nan("");
    rec.flags = {std::string("error:") + e.what()};
    return false;
  }
}

}  // namespace detail

/// K sweep at a fixed seed: only the coupling strength varies across cells.
inline SweepOutcome sweep_k(const SquareMatrix& a, std::span<const double> k_values,
                            double noise, const SdeRunSpec& tmpl, std::size_t threads = 1) {
  if (!is_spd(a).positive_definite)
    throw std::invalid_argument("sweep_k: matrix must be SPD");
  SweepOutcome out;
  out.records.resize(k_values.size());
  out.cell_seconds.resize(k_values.size());
  std::atomic<std::size_t> failures{0};
  run_cells(k_values.size(), threads, [&](std::size_t c) {
    const double t0 = detail::now_seconds();
    ResultRecord& rec = out.records[c];
    rec.routine = "sweep-k";
    if (!detail::dynamics_cell(rec, a, k_values[c], noise, tmpl)) ++failures;
    out.cell_seconds[c] = detail::now_seconds() - t0;
  });
  out.failures = failures;
  return out;
}

/// Scale sweep: runs s*A with K = choose_k(max |s*A|) per cell, paired seeds.
inline SweepOutcome sweep_scale(const SquareMatrix& a, std::span<const double> scales,
                                double noise, const SdeRunSpec& tmpl,
                                std::size_t threads = 1) {
  if (!is_spd(a).positive_definite)
    throw std::invalid_argument("sweep_scale: matrix must be SPD");
  SweepOutcome out;
  out.records.resize(scales.size());
  out.cell_seconds.resize(scales.size());
  std::atomic<std::size_t> failures{0};
  run_cells(scales.size(), threads, [&](std::size_t c) {
    const double t0 = detail::now_seconds();
    SquareMatrix scaled = a;
    for (double& v : scaled.entries()) v *= scales[c];
    ResultRecord& rec = out.records[c];
    rec.routine = "sweep-scale";
    if (!detail::dynamics_cell(rec, scaled, choose_k(max_abs(scaled)), noise, tmpl))
      ++failures;
    out.cell_seconds[c] = detail::now_seconds() - t0;
  });
  out.failures = failures;
  return out;
}

/// Noise sweep at K fixed by the scale rule.
inline SweepOutcome sweep_noise(const SquareMatrix& a, std::span<const double> kn_values,
                                const SdeRunSpec& tmpl, std::size_t threads = 1) {
  if (!is_spd(a).positive_definite)
    throw std::invalid_argument("sweep_noise: matrix must be SPD");
  const double strength = choose_k(max_abs(a));
  SweepOutcome out;
  out.records.resize(kn_values.size());
  out.cell_seconds.resize(kn_values.size());
  std::atomic<std::size_t> failures{0};
  run_cells(kn_values.size(), threads, [&](std::size_t c) {
    const double t0 = detail::now_seconds();
    ResultRecord& rec = out.records[c];
    rec.routine = "sweep-noise";
    if (!detail::dynamics_cell(rec, a, strength, kn_values[c], tmpl)) ++failures;
    out.cell_seconds[c] = detail::now_seconds() - t0;
  });
  out.failures = failures;
  return out;
}

struct BatchOutcome {
  std::vector<ResultRecord> records;  // ordered by (matrix, noise value)
  std::vector<std::pair<double, Histogram>> histograms;  // one per noise value
  std::vector<double> cell_seconds;
  std::size_t failures = 0;
};

/// Random-matrix robustness batch: `count` generated matrices, each solved at
/// every noise value. Per-matrix generation and run streams are derived from
/// the master seed, so the batch is reproducible cell by cell.
inline BatchOutcome random_batch(std::size_t count, std::size_t dim,
                                 std::span<const double> kn_values, const SdeRunSpec& tmpl,
                                 std::uint64_t master_seed, double scale = 1.0,
                                 std::size_t threads = 1) {
  if (count == 0) throw std::invalid_argument("random_batch: count must be >= 1");
  if (kn_values.empty()) throw std::invalid_argument("random_batch: no noise values");
  const std::size_t n_kn = kn_values.size();
  const std::size_t n_cells = count * n_kn;

  BatchOutcome out;
  out.records.resize(n_cells);
  out.cell_seconds.resize(n_cells);
  std::atomic<std::size_t> failures{0};
  run_cells(n_cells, threads, [&](std::size_t c) {
    const double t0 = detail::now_seconds();
    const std::size_t m = c / n_kn;
    const std::size_t k = c % n_kn;
    const std::uint64_t matrix_seed = derive_stream(master_seed, m);
    ResultRecord& rec = out.records[c];
    rec.routine = "random-batch";
    try {
      const SquareMatrix a = random_spd_matrix(dim, scale, matrix_seed);
      SdeRunSpec spec = tmpl;
      spec.seed = derive_stream(matrix_seed, 100 + k);
      rec.seed = spec.seed;
      if (!detail::dynamics_cell(rec, a, choose_k(max_abs(a)), kn_values[k], spec))
        ++failures;
    } catch (const std::exception& e) {
      rec.dim = dim;
      rec.scale = scale;
      rec.noise = kn_values[k];
      rec.n_steps = tmpl.n_steps;
      rec.method = "dynamics";
      rec.rel_err_pct = std::nan("");
      rec.max_phase = std::nan("");
      rec.flags = {std::string("error:") + e.what()};
      ++failures;
    }
    out.cell_seconds[c] = detail::now_seconds() - t0;
  });
  out.failures = failures;

  for (std::size_t k = 0; k < n_kn; ++k) {
    Histogram h;
    for (std::size_t m = 0; m < count; ++m) h.add(out.records[m * n_kn + k].rel_err_pct);
    out.histograms.emplace_back(kn_values[k], h);
  }
  return out;
}

}  // namespace therminv
