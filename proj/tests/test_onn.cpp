#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "therminv/harness.hpp"
#include "therminv/io.hpp"
#include "therminv/onn.hpp"
#include "therminv/rng.hpp"

using namespace therminv;

namespace {

OnnConfig two_osc(double strength, double noise, double j12, double ks) {
  OnnConfig cfg;
  cfg.dim = 2;
  cfg.coupling = SquareMatrix(2);
  cfg.coupling(0, 1) = j12;
  cfg.coupling(1, 0) = j12;
  cfg.injection = {ks, ks};
  cfg.strength = strength;
  cfg.noise = noise;
  return cfg;
}

// central-difference oracle for the energy gradient
std::vector<double> fd_gradient(const OnnConfig& cfg, const PhaseState& phi, double h) {
  std::vector<double> g(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    PhaseState lo = phi, hi = phi;
    lo[i] -= h;
    hi[i] += h;
    g[i] = (onn_energy(cfg, hi) - onn_energy(cfg, lo)) / (2.0 * h);
  }
  return g;
}

double vec_inf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

TEST_CASE("map_matrix_to_onn pinned cases") {
  const auto id_cfg = map_matrix_to_onn(SquareMatrix::identity(3), 1000.0, 1e4);
  CHECK(max_abs(id_cfg.coupling) == 0.0);
  for (double ks : id_cfg.injection) CHECK(ks == 1000.0);
  CHECK_FALSE(id_cfg.has_negative_injection());

  const SquareMatrix a(2, {2, -1, -1, 2});
  const auto cfg = map_matrix_to_onn(a, 1000.0, 1e4);
  CHECK(cfg.coupling(0, 1) == 1.0);
  CHECK(cfg.coupling(1, 0) == 1.0);
  CHECK(cfg.coupling(0, 0) == 0.0);
  CHECK(cfg.injection[0] == 1000.0);
  CHECK(cfg.injection[1] == 1000.0);

  CHECK_THROWS_AS(map_matrix_to_onn(SquareMatrix(2, {1, 0.5, 0.2, 1}), 1000.0, 1e4),
                  NotSymmetric);
  CHECK_THROWS_AS(map_matrix_to_onn(a, -1.0, 1e4), std::invalid_argument);
  CHECK_THROWS_AS(map_matrix_to_onn(a, 1000.0, 0.0), std::invalid_argument);

  // negative row sum flips the injection sign; accepted, flagged
  const SquareMatrix neg(2, {1, -2, -2, 1});
  CHECK(map_matrix_to_onn(neg, 1000.0, 1e4).has_negative_injection());
}

TEST_CASE("map_onn_to_matrix inverts the mapping") {
  const auto cfg = two_osc(1000.0, 1e4, 1.0, 1000.0);
  const auto a = map_onn_to_matrix(cfg);
  CHECK(a(0, 0) == Catch::Approx(2.0));
  CHECK(a(0, 1) == Catch::Approx(-1.0));

  OnnConfig idc;
  idc.dim = 3;
  idc.coupling = SquareMatrix(3);
  idc.injection = {500.0, 500.0, 500.0};
  idc.strength = 500.0;
  idc.noise = 1.0;
  CHECK(max_abs(map_onn_to_matrix(idc) - SquareMatrix::identity(3)) == 0.0);
}

TEST_CASE("mapping round trip is an identity") {
  GaussianStream rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.raw() % 12);
    SquareMatrix a(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        const double v = rng.uniform(-2.0, 2.0);
        a(i, j) = v;
        a(j, i) = v;
      }
    const double k = std::exp(rng.uniform(0.0, 8.0));
    const auto back = map_onn_to_matrix(map_matrix_to_onn(a, k, 1.0));
    REQUIRE(max_abs(back - a) <= 1e-12 * std::max(1.0, max_abs(a)));
  }
}

TEST_CASE("choose_k scale rule") {
  CHECK(choose_k(1.0) == 1000.0);
  CHECK(choose_k(10.0) == 100.0);
  CHECK(choose_k(0.01) == 100000.0);
  CHECK_THROWS_AS(choose_k(0.0), NonPositiveScale);
  CHECK_THROWS_AS(choose_k(-1.0), NonPositiveScale);
}

TEST_CASE("onn_energy pinned values") {
  const auto cfg = two_osc(1.0, 1.0, 1.0, 1.0);
  CHECK(onn_energy(cfg, {0.0, 0.0}) == Catch::Approx(-3.0));
  CHECK(onn_energy(cfg, {std::numbers::pi, 0.0}) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("origin is the global minimum for non-negative couplings") {
  const auto cfg = two_osc(2.0, 1.0, 0.7, 1.3);
  const double e0 = onn_energy(cfg, {0.0, 0.0});
  GaussianStream rng(19);
  for (int i = 0; i < 500; ++i) {
    const PhaseState phi = {rng.uniform(-std::numbers::pi, std::numbers::pi),
                            rng.uniform(-std::numbers::pi, std::numbers::pi)};
    REQUIRE(onn_energy(cfg, phi) >= e0 - 1e-12);
  }
}

TEST_CASE("gradient pinned values") {
  const auto cfg = two_osc(1.0, 1.0, 1.0, 1.0);
  CHECK(vec_inf(onn_energy_gradient(cfg, {0.0, 0.0})) == 0.0);

  OnnConfig scalar;
  scalar.dim = 1;
  scalar.coupling = SquareMatrix(1);
  scalar.injection = {2.0};
  scalar.strength = 1.0;
  scalar.noise = 1.0;
  CHECK(onn_energy_gradient(scalar, {0.1})[0] ==
        Catch::Approx(2.0 * std::sin(0.1)).epsilon(1e-14));
}

TEST_CASE("gradient matches central finite differences") {
  GaussianStream rng(301);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.raw() % 20);
    SquareMatrix j(d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = r + 1; c < d; ++c) {
        const double v = rng.uniform(-1.0, 1.0);
        j(r, c) = v;
        j(c, r) = v;
      }
    OnnConfig cfg;
    cfg.dim = d;
    cfg.coupling = j;
    cfg.injection.resize(d);
    for (double& v : cfg.injection) v = rng.uniform(-2.0, 2.0);
    cfg.strength = std::exp(rng.uniform(0.0, 7.0));
    cfg.noise = 1.0;
    for (double& v : cfg.injection) v *= cfg.strength;

    PhaseState phi(d);
    for (double& v : phi) v = rng.uniform(-std::numbers::pi, std::numbers::pi);

    const auto grad = onn_energy_gradient(cfg, phi);
    const auto fd = fd_gradient(cfg, phi, 1e-6);
    std::vector<double> diff(d);
    for (std::size_t i = 0; i < d; ++i) diff[i] = grad[i] - fd[i];
    REQUIRE(vec_inf(diff) <= 1e-5 * vec_inf(grad));
  }
}

TEST_CASE("kuramoto drift is the negative gradient") {
  GaussianStream rng(67);
  const auto cfg = two_osc(3.0, 1.0, -0.4, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const PhaseState phi = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const auto drift = kuramoto_drift(cfg, phi);
    const auto grad = onn_energy_gradient(cfg, phi);
    REQUIRE(std::fabs(drift[0] + grad[0]) <= 1e-12);
    REQUIRE(std::fabs(drift[1] + grad[1]) <= 1e-12);
  }

  const auto pure = two_osc(1.0, 1.0, 1.0, 0.0);
  const auto d2 = kuramoto_drift(pure, {0.2, 0.0});
  CHECK(d2[0] == Catch::Approx(-std::sin(0.2)).epsilon(1e-14));
  CHECK(d2[1] == Catch::Approx(std::sin(0.2)).epsilon(1e-14));
}

TEST_CASE("linearized drift pinned values and small-phase consistency") {
  OnnConfig scalar;
  scalar.dim = 1;
  scalar.coupling = SquareMatrix(1);
  scalar.injection = {2000.0};  // A = 2I at K = 1000
  scalar.strength = 1000.0;
  scalar.noise = 1.0;
  CHECK(linearized_drift(scalar, {0.001})[0] == Catch::Approx(-2.0).epsilon(1e-12));
  CHECK(vec_inf(linearized_drift(scalar, {0.0})) == 0.0);

  GaussianStream rng(411);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.raw() % 9);
    const SquareMatrix a = random_spd_matrix(d, 1.0, rng.raw());
    const auto cfg = map_matrix_to_onn(a, 1000.0, 1.0);
    PhaseState phi(d);
    for (double& v : phi) v = rng.uniform(-1.0, 1.0);
    const double m = vec_inf(phi);
    for (double& v : phi) v *= 1e-3 / m;

    const auto kur = kuramoto_drift(cfg, phi);
    const auto lin = linearized_drift(cfg, phi);
    std::vector<double> diff(d);
    for (std::size_t i = 0; i < d; ++i) diff[i] = kur[i] - lin[i];
    REQUIRE(vec_inf(diff) <= 1e-5 * vec_inf(lin));
  }
}

TEST_CASE("energy is 2pi periodic in each phase") {
  const auto cfg = two_osc(5.0, 1.0, 0.8, 3.0);
  GaussianStream rng(9);
  for (int i = 0; i < 50; ++i) {
    PhaseState phi = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const double base = onn_energy(cfg, phi);
    for (std::size_t k = 0; k < 2; ++k) {
      PhaseState shifted = phi;
      shifted[k] += 2.0 * std::numbers::pi;
      REQUIRE(onn_energy(cfg, shifted) ==
              Catch::Approx(base).margin(1e-9 * std::max(1.0, std::fabs(base))));
    }
  }
}

TEST_CASE("config validation rejects malformed networks") {
  auto cfg = two_osc(1.0, 1.0, 0.5, 1.0);
  CHECK_NOTHROW(validate_config(cfg));
  cfg.coupling(0, 0) = 0.1;
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);

  auto asym = two_osc(1.0, 1.0, 0.5, 1.0);
  asym.coupling(0, 1) = 0.6;
  CHECK_THROWS_AS(validate_config(asym), std::invalid_argument);

  auto badk = two_osc(0.0, 1.0, 0.5, 1.0);
  CHECK_THROWS_AS(validate_config(badk), std::invalid_argument);
}

TEST_CASE("config JSON document round trips") {
  const auto cfg = map_matrix_to_onn(SquareMatrix(2, {2, -1, -1, 2}), 1000.0, 1e4);
  const json j = onn_config_to_json(cfg);
  CHECK(j.at("dim") == 2);
  CHECK(j.at("K") == 1000.0);
  CHECK(j.at("Kn") == 1e4);
  CHECK(j.at("J").size() == 4);
  CHECK(j.at("Ks").size() == 2);

  const OnnConfig back = onn_config_from_json(j);
  CHECK(back.dim == cfg.dim);
  CHECK(max_abs(back.coupling - cfg.coupling) == 0.0);
  CHECK(back.injection == cfg.injection);
  CHECK(back.strength == cfg.strength);
  CHECK(back.noise == cfg.noise);
}
