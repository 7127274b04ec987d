#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "therminv/matrix.hpp"

namespace therminv {

struct SingularMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnstableSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptySample : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroReferenceEntry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpdReport {
  bool symmetric = false;
  bool positive_definite = false;
  double min_pivot = 0.0;
  double asymmetry = 0.0;  // max |Aij - Aji|
};

/// Symmetry plus Cholesky-pivot test on the symmetrized matrix.
/// positive_definite requires both: symmetry within tol and all pivots > 0.
inline SpdReport is_spd(const SquareMatrix& a, double tol = 1e-10) {
  const std::size_t d = a.dim();
  SpdReport rep;
  rep.asymmetry = max_asymmetry(a);
  rep.symmetric = rep.asymmetry <= tol * max_abs(a);

  // Cholesky on (A + A^T)/2; pivot k is the diagonal residual before sqrt.
  SquareMatrix s(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  SquareMatrix l(d);
  bool ok = true;
  double min_pivot = 0.0;
  for (std::size_t k = 0; k < d && ok; ++k) {
    double pivot = s(k, k);
    for (std::size_t m = 0; m < k; ++m) pivot -= l(k, m) * l(k, m);
    min_pivot = (k == 0) ? pivot : std::min(min_pivot, pivot);
    if (pivot <= 0.0) {
      ok = false;
      break;
    }
    l(k, k) = std::sqrt(pivot);
    for (std::size_t i = k + 1; i < d; ++i) {
      double v = s(i, k);
      for (std::size_t m = 0; m < k; ++m) v -= l(i, m) * l(k, m);
      l(i, k) = v / l(k, k);
    }
  }
  rep.min_pivot = min_pivot;
  rep.positive_definite = ok && rep.symmetric;
  return rep;
}

/// Gauss-Jordan inversion with partial pivoting.
inline SquareMatrix invert_exact(const SquareMatrix& a) {
  const std::size_t d = a.dim();
  SquareMatrix w = a;
  SquareMatrix inv = SquareMatrix::identity(d);
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::fabs(w(r, col)) > std::fabs(w(piv, col))) piv = r;
    if (std::fabs(w(piv, col)) < 1e-300)
      throw SingularMatrix("invert_exact: pivot below 1e-300 at column " +
                           std::to_string(col));
    if (piv != col) {
      for (std::size_t j = 0; j < d; ++j) {
        std::swap(w(piv, j), w(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    }
    const double inv_pivot = 1.0 / w(col, col);
    for (std::size_t j = 0; j < d; ++j) {
      w(col, j) *= inv_pivot;
      inv(col, j) *= inv_pivot;
    }
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = w(r, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) {
        w(r, j) -= f * w(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

/// Solves the stationary-covariance (Lyapunov) relation  A S + S A^T = B
/// by vectorization: (I (x) A + A (x) I) vec(S) = vec(B), dense solve.
/// Dimension is capped at 32 (d^2 x d^2 system).
inline CovarianceMatrix solve_stationary_covariance(const SquareMatrix& a_script,
                                                    const SquareMatrix& b) {
  const std::size_t d = a_script.dim();
  if (b.dim() != d)
    throw std::invalid_argument("solve_stationary_covariance: dimension mismatch");
  if (d > 32)
    throw std::invalid_argument("solve_stationary_covariance: dimension capped at 32");

  const std::size_t n = d * d;
  // Column-major vec: x[i + j*d] = S(i,j).
  std::vector<double> m(n * n, 0.0);
  std::vector<double> rhs(n, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t row = i + j * d;
      rhs[row] = b(i, j);
      for (std::size_t k = 0; k < d; ++k) {
        m[row * n + (k + j * d)] += a_script(i, k);  // vec(A S)
        m[row * n + (i + k * d)] += a_script(j, k);  // vec(S A^T)
      }
    }

  // Gaussian elimination with partial pivoting on [M | rhs].
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(m[r * n + col]) > std::fabs(m[piv * n + col])) piv = r;
    if (std::fabs(m[piv * n + col]) < 1e-300)
      throw UnstableSystem("solve_stationary_covariance: singular Kronecker system");
    if (piv != col) {
      for (std::size_t j = col; j < n; ++j) std::swap(m[piv * n + j], m[col * n + j]);
      std::swap(rhs[piv], rhs[col]);
    }
    const double inv_pivot = 1.0 / m[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r * n + col] * inv_pivot;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) m[r * n + j] -= f * m[col * n + j];
      rhs[r] -= f * rhs[col];
    }
  }
  for (std::size_t col = n; col-- > 0;) {
    double v = rhs[col];
    for (std::size_t j = col + 1; j < n; ++j) v -= m[col * n + j] * rhs[j];
    rhs[col] = v / m[col * n + col];
  }

  SquareMatrix s(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) s(i, j) = rhs[i + j * d];
  // The solution of a symmetric-B system is symmetric up to roundoff.
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double v = 0.5 * (s(i, j) + s(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  return CovarianceMatrix(std::move(s));
}

struct SampleMoments {
  CovarianceMatrix second_moment;  // (1/N) sum phi phi^T, no mean subtraction
  std::vector<double> mean;        // diagnostic: should be ~0 for b = 0
  std::size_t n_samples = 0;
};

/// Raw second moment of a sample sequence, Kahan-compensated, fixed order.
inline SampleMoments sample_second_moment(std::span<const PhaseState> samples) {
  if (samples.size() < 2) throw EmptySample("sample_second_moment: need at least 2 samples");
  const std::size_t d = samples.front().size();
  for (const auto& s : samples)
    if (s.size() != d)
      throw std::invalid_argument("sample_second_moment: inconsistent dimensions");

  std::vector<double> acc(d * d, 0.0), comp(d * d, 0.0);
  std::vector<double> macc(d, 0.0), mcomp(d, 0.0);
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < d; ++i) {
      const double ym = s[i] - mcomp[i];
      const double tm = macc[i] + ym;
      mcomp[i] = (tm - macc[i]) - ym;
      macc[i] = tm;
      for (std::size_t j = i; j < d; ++j) {
        const double y = s[i] * s[j] - comp[i * d + j];
        const double t = acc[i * d + j] + y;
        comp[i * d + j] = (t - acc[i * d + j]) - y;
        acc[i * d + j] = t;
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  SquareMatrix m(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const double v = acc[i * d + j] * inv_n;
      m(i, j) = v;
      m(j, i) = v;
    }
  std::vector<double> mean(d);
  for (std::size_t i = 0; i < d; ++i) mean[i] = macc[i] * inv_n;
  return SampleMoments{CovarianceMatrix(std::move(m)), std::move(mean), samples.size()};
}

/// Mean absolute percent error over all entries:
/// (1/d^2) sum_ij |(T_ij - E_ij)/T_ij| * 100.
/// Throws ZeroReferenceEntry when a reference entry is too small for the
/// entrywise metric to make sense.
inline double relative_error(const SquareMatrix& truth, const SquareMatrix& est) {
  if (truth.dim() != est.dim())
    throw std::invalid_argument("relative_error: dimension mismatch");
  const std::size_t d = truth.dim();
  const double guard = 1e-14 * inf_norm(truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double t = truth(i, j);
      if (std::fabs(t) < guard)
        throw ZeroReferenceEntry("relative_error: reference entry (" + std::to_string(i) +
                                 "," + std::to_string(j) + ") below 1e-14 * norm");
      sum += std::fabs((t - est(i, j)) / t);
    }
  return sum * 100.0 / static_cast<double>(d * d);
}

struct RelativeErrorSummary {
  double percent = 0.0;
  std::size_t skipped = 0;  // entries excluded by the near-zero reference guard
};

/// Fallback variant: near-zero reference entries are skipped and counted.
inline RelativeErrorSummary relative_error_skipping(const SquareMatrix& truth,
                                                    const SquareMatrix& est) {
  if (truth.dim() != est.dim())
    throw std::invalid_argument("relative_error: dimension mismatch");
  const std::size_t d = truth.dim();
  const double guard = 1e-14 * inf_norm(truth);
  double sum = 0.0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double t = truth(i, j);
      if (std::fabs(t) < guard) {
        ++skipped;
        continue;
      }
      sum += std::fabs((t - est(i, j)) / t);
    }
  if (skipped == d * d)
    throw ZeroReferenceEntry("relative_error: every reference entry is near zero");
  return RelativeErrorSummary{sum * 100.0 / static_cast<double>(d * d - skipped), skipped};
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> symmetric_eigenvalues(const SquareMatrix& a) {
  const std::size_t d = a.dim();
  SquareMatrix w(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) w(i, j) = 0.5 * (a(i, j) + a(j, i));

  const double scale = std::max(max_abs(w), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) off = std::max(off, std::fabs(w(i, j)));
    if (off <= 1e-15 * scale) break;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        if (std::fabs(w(p, q)) <= 1e-18 * scale) continue;
        const double theta = 0.5 * (w(q, q) - w(p, p)) / w(p, q);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double wkp = w(k, p), wkq = w(k, q);
          w(k, p) = c * wkp - s * wkq;
          w(k, q) = s * wkp + c * wkq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double wpk = w(p, k), wqk = w(q, k);
          w(p, k) = c * wpk - s * wqk;
          w(q, k) = s * wpk + c * wqk;
        }
      }
  }
  std::vector<double> eig(d);
  for (std::size_t i = 0; i < d; ++i) eig[i] = w(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace therminv
