#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace therminv {

/// Derives an independent stream seed from a master seed and a stream index
/// (splitmix64 finalizer). The mapping is part of the reproducibility
/// contract and is pinned by regression tests.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_stream(derive_stream(master, a), b);
}

/// Seeded Gaussian source: mt19937_64 uniforms through a fixed Box-Muller
/// transform. std::normal_distribution is implementation-defined, so the
/// transform is spelled out here to keep seed-to-output stable.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on (0, 1), strictly inside the interval.
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  void fill_gaussian(std::span<double> out) {
    for (double& v : out) v = gaussian();
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace therminv
