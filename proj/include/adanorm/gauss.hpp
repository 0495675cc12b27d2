#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adanorm/linalg.hpp"
#include "adanorm/rng.hpp"

namespace adanorm {

/// Standard normal distribution function, accurate to ~1 ulp (erfc based).
double std_normal_cdf(double x);

/// Upper tail 1 - Phi(x) without cancellation.
double std_normal_sf(double x);

/// Inverse of the standard normal CDF on (0, 1); throws DomainError outside.
/// Wichura's AS 241 followed by one Halley correction step.
double std_normal_quantile(double u);

/// Antithetic draws from N(0, Sigma): rows 2i and 2i+1 are exact negations.
/// Stored twice: row-major (one draw per row) and column-major (one
/// coordinate per column) for the blocked kernels.
class DrawMatrix {
 public:
  DrawMatrix() = default;

  /// Wraps explicit base rows; each is followed by its negation. Used for
  /// tests and by sample_mvn.
  static DrawMatrix from_base_rows(const Matrix& base, CovMatrix source_cov = {}, SeededStream source = {});

  std::size_t m() const noexcept { return rows_.rows(); }
  std::size_t dim() const noexcept { return rows_.cols(); }

  std::span<const double> row(std::size_t i) const noexcept { return rows_.row(i); }
  const Matrix& rows() const noexcept { return rows_; }

  /// Column j as a contiguous span of length m.
  std::span<const double> column(std::size_t j) const noexcept { return {cols_.data() + j * m(), m()}; }

  const CovMatrix& source_cov() const noexcept { return source_cov_; }
  SeededStream source_seed() const noexcept { return source_; }

 private:
  Matrix rows_;
  std::vector<double> cols_;
  CovMatrix source_cov_;
  SeededStream source_{};
};

/// Fills z with i.i.d. standard normals by inverse CDF on the generator.
void standard_normals(Xoshiro256pp& gen, std::span<double> z);

/// out = L * z for lower-triangular L.
void lower_times(const Matrix& lower, std::span<const double> z, std::span<double> out);

/// One draw L * z from a fresh generator on `stream`.
std::vector<double> sample_normal_vector(const Matrix& lower, SeededStream stream);

/// rows x d i.i.d. standard normals consumed row by row from `stream`.
Matrix standard_normal_rows(std::size_t rows, std::size_t d, SeededStream stream);

/// Antithetic draws whose base rows are L * z_i for the rows z_i of `z`.
DrawMatrix draws_from_standard(const Matrix& lower, const Matrix& z, SeededStream stream, CovMatrix source_cov = {});

/// m antithetic draws (m even, >= 2): rows[2i] = L z_i, rows[2i+1] = -rows[2i],
/// z_i consumed sequentially from the stream. Deterministic in (seed, stream).
DrawMatrix sample_mvn(const Matrix& lower, std::size_t m, SeededStream stream, CovMatrix source_cov = {});

}  // namespace adanorm
