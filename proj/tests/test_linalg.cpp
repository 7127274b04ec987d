#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "therminv/harness.hpp"
#include "therminv/linalg.hpp"
#include "therminv/matrix.hpp"
#include "therminv/rng.hpp"

using namespace therminv;

namespace {

SquareMatrix make(std::size_t d, std::initializer_list<double> vals) {
  return SquareMatrix(d, std::vector<double>(vals));
}

double max_abs_diff(const SquareMatrix& a, const SquareMatrix& b) {
  return max_abs(a - b);
}

}  // namespace

TEST_CASE("is_spd basic verdicts") {
  CHECK(is_spd(SquareMatrix::identity(3), 1e-10).symmetric);
  CHECK(is_spd(SquareMatrix::identity(3), 1e-10).positive_definite);

  // eigenvalues {3, -1}
  const auto indefinite = is_spd(make(2, {1, 2, 2, 1}));
  CHECK(indefinite.symmetric);
  CHECK_FALSE(indefinite.positive_definite);
  CHECK(indefinite.min_pivot < 0.0);

  // eigenvalues {1, 3}
  CHECK(is_spd(make(2, {2, -1, -1, 2})).positive_definite);

  const auto askew = is_spd(make(2, {1, 0.5, 0, 1}));
  CHECK_FALSE(askew.symmetric);
  CHECK_FALSE(askew.positive_definite);
  CHECK(askew.asymmetry == Catch::Approx(0.5));
}

TEST_CASE("invert_exact on pinned cases") {
  CHECK(max_abs_diff(invert_exact(SquareMatrix::identity(4)), SquareMatrix::identity(4)) ==
        0.0);

  const auto diag = invert_exact(make(2, {2, 0, 0, 4}));
  CHECK(diag(0, 0) == Catch::Approx(0.5));
  CHECK(diag(1, 1) == Catch::Approx(0.25));
  CHECK(diag(0, 1) == 0.0);

  const auto a = make(2, {2, -1, -1, 2});
  const auto inv = invert_exact(a);
  CHECK(inv(0, 0) == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(inv(0, 1) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(max_abs_diff(a * inv, SquareMatrix::identity(2)) < 1e-14);

  CHECK_THROWS_AS(invert_exact(SquareMatrix(3)), SingularMatrix);
}

TEST_CASE("invert_exact round trip on random SPD matrices") {
  GaussianStream rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.raw() % 9);
    const SquareMatrix a = random_spd_matrix(d, 1.0, rng.raw());
    const SquareMatrix res = a * invert_exact(a) - SquareMatrix::identity(d);
    REQUIRE(inf_norm(res) <= 1e-9);
  }
}

TEST_CASE("solve_stationary_covariance pinned cases") {
  // scalar relation 2 sigma = 2 per entry
  const auto id = solve_stationary_covariance(SquareMatrix::identity(3),
                                              2.0 * SquareMatrix::identity(3));
  CHECK(max_abs_diff(id.matrix(), SquareMatrix::identity(3)) < 1e-12);

  // A = K*A0 with B = (2/Kn) I  ->  Sigma = (Kn K A0)^-1
  const double k = 1000.0, kn = 1e4;
  const auto a0 = make(2, {2, -1, -1, 2});
  const auto sigma =
      solve_stationary_covariance(k * a0, (2.0 / kn) * SquareMatrix::identity(2));
  const auto expected = invert_exact((kn * k) * a0);
  CHECK(max_abs_diff(sigma.matrix(), expected) <= 1e-8 * max_abs(expected));

  CHECK_THROWS_AS(solve_stationary_covariance(SquareMatrix(2), SquareMatrix::identity(2)),
                  UnstableSystem);
  CHECK_THROWS_AS(solve_stationary_covariance(SquareMatrix::identity(33),
                                              SquareMatrix::identity(33)),
                  std::invalid_argument);
}

TEST_CASE("solve_stationary_covariance agrees with the inversion oracle") {
  GaussianStream rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.raw() % 5);
    const SquareMatrix a = random_spd_matrix(d, 1.0, rng.raw());
    const double k = 1000.0, kn = 1e4;
    const auto sigma =
        solve_stationary_covariance(k * a, (2.0 / kn) * SquareMatrix::identity(d));
    const auto expected = invert_exact((kn * k) * a);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        REQUIRE(std::fabs(sigma(i, j) - expected(i, j)) <=
                1e-8 * std::fabs(expected(i, j)));
  }
}

TEST_CASE("Lyapunov residual is small") {
  GaussianStream rng(5150);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.raw() % 7);
    const SquareMatrix a = random_spd_matrix(d, 1.0, rng.raw());
    SquareMatrix b(d);
    for (std::size_t i = 0; i < d; ++i) b(i, i) = 0.5 + 0.5 * rng.uniform();
    const auto sigma = solve_stationary_covariance(a, b);
    const SquareMatrix res = a * sigma.matrix() + sigma.matrix() * transpose(a) - b;
    REQUIRE(inf_norm(res) <= 1e-9 * inf_norm(b));
  }
}

TEST_CASE("sample_second_moment pinned cases") {
  const std::vector<PhaseState> pm = {{1.0, 0.0}, {-1.0, 0.0}};
  const auto m = sample_second_moment(pm);
  CHECK(m.second_moment(0, 0) == 1.0);
  CHECK(m.second_moment(0, 1) == 0.0);
  CHECK(m.second_moment(1, 1) == 0.0);
  CHECK(m.mean[0] == 0.0);
  CHECK(m.n_samples == 2);

  const std::vector<PhaseState> zeros(5, PhaseState{0.0, 0.0, 0.0});
  CHECK(max_abs(sample_second_moment(zeros).second_moment.matrix()) == 0.0);

  CHECK_THROWS_AS(sample_second_moment(std::vector<PhaseState>{{1.0}}), EmptySample);
  const std::vector<PhaseState> ragged = {{1.0, 2.0}, {1.0}};
  CHECK_THROWS_AS(sample_second_moment(ragged), std::invalid_argument);
}

TEST_CASE("sample_second_moment recovers a known covariance from Monte Carlo") {
  // phi = L z with L the Cholesky factor of Sigma = 1e-6 * [[2,1],[1,2]]
  const double s = 1e-6;
  const double l00 = std::sqrt(2.0 * s);
  const double l10 = s / l00;
  const double l11 = std::sqrt(2.0 * s - l10 * l10);
  GaussianStream rng(424242);
  const std::size_t n = 1'000'000;
  std::vector<PhaseState> samples(n, PhaseState(2));
  for (auto& p : samples) {
    const double z0 = rng.gaussian(), z1 = rng.gaussian();
    p[0] = l00 * z0;
    p[1] = l10 * z0 + l11 * z1;
  }
  const auto mom = sample_second_moment(samples);
  const double bound = 3.0 * std::sqrt(2.0 / static_cast<double>(n)) * (2.0 * s);
  CHECK(std::fabs(mom.second_moment(0, 0) - 2.0 * s) < bound);
  CHECK(std::fabs(mom.second_moment(1, 1) - 2.0 * s) < bound);
  CHECK(std::fabs(mom.second_moment(0, 1) - s) < bound);
}

TEST_CASE("sample_second_moment is permutation invariant") {
  GaussianStream rng(31);
  std::vector<PhaseState> samples(101, PhaseState(3));
  for (auto& p : samples)
    for (double& v : p) v = rng.uniform(-2.0, 2.0);
  const auto base = sample_second_moment(samples);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng.raw() % (i + 1)]);
  std::vector<PhaseState> shuffled;
  shuffled.reserve(samples.size());
  for (std::size_t i : order) shuffled.push_back(samples[i]);
  const auto perm = sample_second_moment(shuffled);

  const double scale = max_abs(base.second_moment.matrix());
  CHECK(max_abs_diff(base.second_moment.matrix(), perm.second_moment.matrix()) <=
        1e-12 * scale);
}

TEST_CASE("relative_error pinned cases") {
  const auto a = make(2, {1, 1, 1, 1});
  CHECK(relative_error(a, a) == 0.0);
  CHECK(relative_error(a, make(2, {1.1, 1, 1, 1})) ==
        Catch::Approx(2.5).epsilon(1e-12));
  CHECK(relative_error(make(1, {2}), make(1, {1})) == Catch::Approx(50.0));
  CHECK_THROWS_AS(relative_error(make(2, {1, 0, 0, 1}), a), ZeroReferenceEntry);

  const auto skipped = relative_error_skipping(make(2, {1, 0, 0, 1}), a);
  CHECK(skipped.skipped == 2);
  CHECK(skipped.percent == Catch::Approx(0.0));
}

TEST_CASE("relative_error symmetry properties") {
  GaussianStream rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.raw() % 5);
    SquareMatrix t(d), e(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        t(i, j) = rng.uniform(0.5, 2.0) * (rng.raw() % 2 ? 1.0 : -1.0);
        e(i, j) = t(i, j) * rng.uniform(0.8, 1.2);
      }
    const double base = relative_error(t, e);
    CHECK(relative_error(transpose(t), transpose(e)) == Catch::Approx(base).epsilon(1e-12));

    // simultaneous row/column permutation (cyclic shift)
    SquareMatrix tp(d), ep(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        tp((i + 1) % d, (j + 1) % d) = t(i, j);
        ep((i + 1) % d, (j + 1) % d) = e(i, j);
      }
    CHECK(relative_error(tp, ep) == Catch::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("symmetric_eigenvalues on known spectra") {
  const auto eig = symmetric_eigenvalues(make(2, {2, -1, -1, 2}));
  CHECK(eig[0] == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(eig[1] == Catch::Approx(3.0).epsilon(1e-12));

  const auto ind = symmetric_eigenvalues(make(2, {1, 2, 2, 1}));
  CHECK(ind[0] == Catch::Approx(-1.0).epsilon(1e-12));
  CHECK(ind[1] == Catch::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("matrix text format round trip") {
  const auto a = make(2, {2, -1, -1, 2});
  std::stringstream ss;
  write_matrix(ss, a);
  const auto b = read_matrix(ss);
  CHECK(max_abs_diff(a, b) == 0.0);

  std::stringstream bad("2\n1 2\n3\n");
  CHECK_THROWS(read_matrix(bad));
}

TEST_CASE("covariance matrix invariants are enforced") {
  CHECK_THROWS_AS(CovarianceMatrix(make(2, {1, 0.5, 0.4, 1})), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceMatrix(make(2, {-1, 0, 0, 1})), std::invalid_argument);
  CHECK_NOTHROW(CovarianceMatrix(make(2, {1, 0.5, 0.5, 1})));
}
