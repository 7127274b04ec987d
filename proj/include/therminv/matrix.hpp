#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace therminv {

/// Oscillator phases in radians, measured against the zero-phase reference.
using PhaseState = std::vector<double>;

/// Dense real d x d matrix, row-major storage.
class SquareMatrix {
 public:
  SquareMatrix() = default;

  explicit SquareMatrix(std::size_t dim, double fill = 0.0)
      : dim_(dim), data_(dim * dim, fill) {
    if (dim == 0) throw std::invalid_argument("SquareMatrix: dim must be >= 1");
  }

  SquareMatrix(std::size_t dim, std::vector<double> entries)
      : dim_(dim), data_(std::move(entries)) {
    if (dim == 0) throw std::invalid_argument("SquareMatrix: dim must be >= 1");
    if (data_.size() != dim * dim)
      throw std::invalid_argument("SquareMatrix: entries must be dim*dim");
  }

  static SquareMatrix identity(std::size_t dim) {
    SquareMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dim() const { return dim_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  const std::vector<double>& entries() const { return data_; }
  std::vector<double>& entries() { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

inline SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("matrix product: dimension mismatch");
  const std::size_t d = a.dim();
  SquareMatrix c(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline SquareMatrix operator*(double s, const SquareMatrix& a) {
  SquareMatrix c = a;
  for (double& v : c.entries()) v *= s;
  return c;
}

inline SquareMatrix operator-(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("matrix difference: dimension mismatch");
  SquareMatrix c = a;
  for (std::size_t k = 0; k < c.entries().size(); ++k) c.entries()[k] -= b.entries()[k];
  return c;
}

inline SquareMatrix operator+(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("matrix sum: dimension mismatch");
  SquareMatrix c = a;
  for (std::size_t k = 0; k < c.entries().size(); ++k) c.entries()[k] += b.entries()[k];
  return c;
}

inline SquareMatrix transpose(const SquareMatrix& a) {
  const std::size_t d = a.dim();
  SquareMatrix t(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) t(j, i) = a(i, j);
  return t;
}

inline std::vector<double> mat_vec(const SquareMatrix& a, const std::vector<double>& x) {
  if (a.dim() != x.size()) throw std::invalid_argument("mat_vec: dimension mismatch");
  const std::size_t d = a.dim();
  std::vector<double> y(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

/// Largest entry magnitude.
inline double max_abs(const SquareMatrix& a) {
  double m = 0.0;
  for (double v : a.entries()) m = std::max(m, std::fabs(v));
  return m;
}

/// Matrix infinity norm (max absolute row sum).
inline double inf_norm(const SquareMatrix& a) {
  const std::size_t d = a.dim();
  double m = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < d; ++j) r += std::fabs(a(i, j));
    m = std::max(m, r);
  }
  return m;
}

inline double max_asymmetry(const SquareMatrix& a) {
  const std::size_t d = a.dim();
  double m = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      m = std::max(m, std::fabs(a(i, j) - a(j, i)));
  return m;
}

/// Symmetric phase-covariance matrix (radians^2). Checked on construction:
/// symmetric to 1e-12 relative, non-negative diagonal.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;

  explicit CovarianceMatrix(SquareMatrix m) : m_(std::move(m)) {
    const double scale = max_abs(m_);
    if (max_asymmetry(m_) > 1e-12 * std::max(scale, 1e-300))
      throw std::invalid_argument("CovarianceMatrix: not symmetric");
    for (std::size_t i = 0; i < m_.dim(); ++i)
      if (m_(i, i) < 0.0)
        throw std::invalid_argument("CovarianceMatrix: negative diagonal entry");
  }

  std::size_t dim() const { return m_.dim(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const SquareMatrix& matrix() const { return m_; }

 private:
  SquareMatrix m_;
};

// --- shared matrix text format: first line d, then d rows of d reals ---

inline SquareMatrix read_matrix(std::istream& in) {
  std::size_t d = 0;
  if (!(in >> d) || d == 0) throw std::runtime_error("matrix format: bad dimension line");
  SquareMatrix m(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (!(in >> m(i, j)))
        throw std::runtime_error("matrix format: expected " + std::to_string(d * d) +
                                 " entries");
  if (!m.all_finite()) throw std::runtime_error("matrix format: non-finite entry");
  return m;
}

inline void write_matrix(std::ostream& out, const SquareMatrix& m) {
  out << m.dim() << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    for (std::size_t j = 0; j < m.dim(); ++j) out << (j ? " " : "") << m(i, j);
    out << "\n";
  }
}

inline SquareMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  return read_matrix(in);
}

inline void write_matrix_file(const std::string& path, const SquareMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix file: " + path);
  write_matrix(out, m);
}

}  // namespace therminv
