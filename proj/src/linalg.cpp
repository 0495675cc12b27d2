#include "adanorm/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "adanorm/error.hpp"

namespace adanorm {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) fail(ErrorKind::DimensionMismatch, "ragged row " + std::to_string(i));
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

std::vector<double> Matrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail(ErrorKind::DimensionMismatch, "matrix product shapes");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

CovMatrix::CovMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) fail(ErrorKind::DimensionMismatch, "covariance must be square");
  if (entries_.rows() == 0) fail(ErrorKind::DimensionMismatch, "covariance must have positive dimension");
  const std::size_t d = entries_.rows();
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k) {
      const double a = entries_(j, k);
      if (!std::isfinite(a)) fail(ErrorKind::DomainError, "covariance entry is not finite");
      if (std::abs(a - entries_(k, j)) > 1e-12 * std::max(1.0, std::abs(a)))
        fail(ErrorKind::DomainError, "covariance is not symmetric");
    }
}

double CovMatrix::trace() const noexcept {
  double t = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) t += entries_(i, i);
  return t;
}

bool cholesky_plain(const Matrix& a, Matrix& lower) {
  const std::size_t n = a.rows();
  lower = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lower(j, k) * lower(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    lower(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / ljj;
    }
  }
  return true;
}

CholeskyFactor cholesky_factor(const CovMatrix& sigma) {
  CholeskyFactor out;
  if (cholesky_plain(sigma.entries(), out.lower)) return out;

  constexpr std::array<double, 3> kJitter{1e-10, 1e-8, 1e-6};
  const std::size_t d = sigma.dim();
  const double scale = sigma.trace() / static_cast<double>(d);
  for (double eps : kJitter) {
    ++out.escalations;
    const double add = eps * scale;
    if (!(add > 0.0)) break;
    Matrix jittered = sigma.entries();
    for (std::size_t i = 0; i < d; ++i) jittered(i, i) += add;
    if (cholesky_plain(jittered, out.lower)) {
      out.jitter = add;
      return out;
    }
  }
  fail(ErrorKind::NotPositiveDefinite,
       "covariance is not positive definite after " + std::to_string(out.escalations) + " jitter escalations");
}

std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b) {
  const std::size_t n = lower.rows();
  if (b.size() != n) fail(ErrorKind::DimensionMismatch, "right-hand side length");
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= lower(i, k) * y[k];
    y[i] /= lower(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= lower(k, ii) * y[k];
    y[ii] /= lower(ii, ii);
  }
  return y;
}

}  // namespace adanorm
