#pragma once

// Dense binary64 linear algebra used throughout the library: a row-major
// matrix, a symmetric matrix that is symmetric by construction, Cholesky
// factor/solve, a cyclic Jacobi eigensolver and compensated summation.
//
// Everything here is single-threaded and deterministic: identical inputs give
// bitwise identical outputs.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace rgcinit {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b. Throws ValidationError on inner-dimension mismatch.
Matrix multiply(const Matrix& a, const Matrix& b);

/// Frobenius norm of a dense matrix.
double frobenius_norm(const Matrix& m);

/// Square matrix whose two triangles are always written together, so it is
/// exactly symmetric at every point of its life.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(std::size_t dim = 0) : m_(dim, dim) {}

  static SymmetricMatrix identity(std::size_t dim);
  static SymmetricMatrix diagonal(std::span<const double> values);
  /// Builds from the lower triangle (including diagonal) of a square matrix.
  static SymmetricMatrix from_lower(const Matrix& m);

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  void set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }
  void add_to_diagonal(double v);
  SymmetricMatrix scaled(double factor) const;

  double trace() const;
  double frobenius_norm() const { return rgcinit::frobenius_norm(m_); }
  const Matrix& dense() const noexcept { return m_; }

  bool operator==(const SymmetricMatrix&) const = default;

 private:
  Matrix m_;
};

/// Lower-triangular Cholesky factor L with L * L^T equal to the input.
class SpdFactorization {
 public:
  std::size_t dim() const noexcept { return lower_.rows(); }
  const Matrix& lower() const noexcept { return lower_; }

 private:
  friend SpdFactorization spd_factor(const SymmetricMatrix& a);
  explicit SpdFactorization(Matrix lower) : lower_(std::move(lower)) {}
  Matrix lower_;
};

/// Cholesky factorization. Throws NotPositiveDefinite carrying the index of the
/// first pivot that is not strictly positive (or not finite).
SpdFactorization spd_factor(const SymmetricMatrix& a);

/// Solves A X = rhs for all columns of rhs with one factorization.
Matrix spd_solve(const SpdFactorization& f, const Matrix& rhs);
std::vector<double> spd_solve(const SpdFactorization& f, std::span<const double> rhs);

struct SymmetricEigen {
  std::vector<double> values;  // sorted descending
  Matrix vectors;              // column j pairs with values[j]
};

/// Cyclic Jacobi eigendecomposition. Each eigenvector is signed so that its
/// largest-magnitude component (first one on ties) is positive. Throws
/// ConvergenceError if the off-diagonal mass has not vanished after
/// `max_sweeps` sweeps.
SymmetricEigen sym_eigen(const SymmetricMatrix& a, int max_sweeps = 100);

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Compensated sum of `values` in sequence order.
double stable_sum(std::span<const double> values) noexcept;

}  // namespace rgcinit
