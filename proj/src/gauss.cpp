#include "adanorm/gauss.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "adanorm/error.hpp"

namespace adanorm {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace {

// Wichura (1988), Algorithm AS 241, PPND16.
double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r + 6.7265770927008700853e+4) * r +
                4.5921953931549871457e+4) * r + 1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r + 3.9307895800092710610e+4) * r +
                2.1213794301586595867e+4) * r + 5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                 1.27045825245236838258e+0) * r + 3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

}  // namespace

double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) fail(ErrorKind::DomainError, "normal quantile needs u in (0,1), got " + std::to_string(u));
  double x = ppnd16(u);
  // Halley step on Phi(x) - u; the residual is taken on the smaller tail.
  const double err = u < 0.5 ? std_normal_cdf(x) - u : (1.0 - u) - std_normal_sf(x);
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  if (density > 0.0) {
    const double step = err / density;
    x -= step / (1.0 + 0.5 * x * step);
  }
  return x;
}

DrawMatrix DrawMatrix::from_base_rows(const Matrix& base, CovMatrix source_cov, SeededStream source) {
  DrawMatrix out;
  const std::size_t half = base.rows();
  const std::size_t d = base.cols();
  if (half == 0 || d == 0) fail(ErrorKind::DimensionMismatch, "draw matrix needs at least one row and column");
  out.rows_ = Matrix(2 * half, d);
  for (std::size_t i = 0; i < half; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      out.rows_(2 * i, j) = base(i, j);
      out.rows_(2 * i + 1, j) = -base(i, j);
    }
  const std::size_t m = 2 * half;
  out.cols_.resize(m * d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) out.cols_[j * m + i] = out.rows_(i, j);
  out.source_cov_ = std::move(source_cov);
  out.source_ = source;
  return out;
}

void standard_normals(Xoshiro256pp& gen, std::span<double> z) {
  for (double& v : z) v = std_normal_quantile(gen.uniform_open());
}

void lower_times(const Matrix& lower, std::span<const double> z, std::span<double> out) {
  const std::size_t d = lower.rows();
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k <= i; ++k) s += lower(i, k) * z[k];
    out[i] = s;
  }
}

std::vector<double> sample_normal_vector(const Matrix& lower, SeededStream stream) {
  const std::size_t d = lower.rows();
  Xoshiro256pp gen(stream);
  std::vector<double> z(d), out(d);
  standard_normals(gen, z);
  lower_times(lower, z, out);
  return out;
}

Matrix standard_normal_rows(std::size_t rows, std::size_t d, SeededStream stream) {
  Xoshiro256pp gen(stream);
  Matrix z(rows, d);
  for (std::size_t i = 0; i < rows; ++i) standard_normals(gen, z.row(i));
  return z;
}

DrawMatrix draws_from_standard(const Matrix& lower, const Matrix& z, SeededStream stream, CovMatrix source_cov) {
  if (z.cols() != lower.rows()) fail(ErrorKind::DimensionMismatch, "standard normal rows do not match the factor");
  Matrix base(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) lower_times(lower, z.row(i), base.row(i));
  return DrawMatrix::from_base_rows(base, std::move(source_cov), stream);
}

DrawMatrix sample_mvn(const Matrix& lower, std::size_t m, SeededStream stream, CovMatrix source_cov) {
  if (m < 2 || m % 2 != 0) fail(ErrorKind::DomainError, "draw count must be even and >= 2");
  return draws_from_standard(lower, standard_normal_rows(m / 2, lower.rows(), stream), stream, std::move(source_cov));
}

}  // namespace adanorm
