#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace adanorm {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  std::vector<double> column(std::size_t j) const;

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Symmetric covariance matrix. Construction validates symmetry
/// (|a_jk - a_kj| <= 1e-12 * max(1, |a_jk|)) and throws DomainError otherwise.
class CovMatrix {
 public:
  CovMatrix() = default;
  explicit CovMatrix(Matrix entries);

  static CovMatrix identity(std::size_t d) { return CovMatrix(Matrix::identity(d)); }

  std::size_t dim() const noexcept { return entries_.rows(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return entries_(i, j); }
  const Matrix& entries() const noexcept { return entries_; }
  double trace() const noexcept;

  friend bool operator==(const CovMatrix&, const CovMatrix&) = default;

 private:
  Matrix entries_;
};

/// Outcome of a jittered Cholesky factorization.
struct CholeskyFactor {
  Matrix lower;          ///< L with L * L^T = sigma + jitter * I
  double jitter = 0.0;   ///< absolute diagonal jitter that was added (0 if none)
  int escalations = 0;   ///< how many jitter levels were tried
};

/// Lower-triangular factor of sigma. On failure, retries with
/// eps * (trace/d) * I added for eps in {1e-10, 1e-8, 1e-6}; throws
/// NotPositiveDefinite once those are exhausted.
CholeskyFactor cholesky_factor(const CovMatrix& sigma);

/// Plain factorization without jitter; returns false if a pivot is not positive.
bool cholesky_plain(const Matrix& a, Matrix& lower);

/// Solves (L L^T) x = b given the lower factor.
std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b);

}  // namespace adanorm
