#include <doctest.h>

#include <cmath>
#include <cstring>

#include "adanorm/error.hpp"
#include "adanorm/gauss.hpp"
#include "adanorm/linalg.hpp"
#include "adanorm/rng.hpp"
#include "oracles.hpp"

using namespace adanorm;

TEST_SUITE("rng_gauss") {

TEST_CASE("xoshiro streams are reproducible and distinct") {
  Xoshiro256pp a({42, 7});
  Xoshiro256pp b({42, 7});
  Xoshiro256pp c({42, 8});
  int same_as_c = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    same_as_c += x == c.next();
  }
  CHECK(same_as_c == 0);
}

TEST_CASE("uniform_open stays inside (0, 1) and bounded() covers its range") {
  Xoshiro256pp gen({1, 0});
  int counts[7] = {};
  for (int i = 0; i < 70000; ++i) {
    const double u = gen.uniform_open();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    ++counts[gen.bounded(7)];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("cholesky of the identity and of a diagonal matrix") {
  const auto eye = cholesky_factor(CovMatrix::identity(3));
  CHECK(eye.lower == Matrix::identity(3));
  CHECK(eye.jitter == 0.0);

  const auto diag = cholesky_factor(CovMatrix(Matrix::from_rows({{4, 0}, {0, 9}})));
  CHECK(diag.lower == Matrix::from_rows({{2, 0}, {0, 3}}));
}

TEST_CASE("cholesky factor multiplies back to the input") {
  const CovMatrix sigma(Matrix::from_rows({{2, 1}, {1, 2}}));
  const auto f = cholesky_factor(sigma);
  const Matrix back = multiply(f.lower, transpose(f.lower));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(f.lower(i, i) > 0.0);
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(back(i, j) - sigma(i, j)) <= 1e-10 * (1 + std::abs(sigma(i, j))));
  }
}

TEST_CASE("rank-deficient covariance is rescued by jitter") {
  const CovMatrix sigma(Matrix::from_rows({{1, 1}, {1, 1}}));
  const auto f = cholesky_factor(sigma);
  CHECK(f.jitter > 0.0);
  CHECK(f.escalations >= 1);
}

TEST_CASE("indefinite covariance fails after escalation") {
  const CovMatrix sigma(Matrix::from_rows({{1, 2}, {2, 1}}));
  try {
    (void)cholesky_factor(sigma);
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
  }
}

TEST_CASE("asymmetric matrices are rejected") {
  CHECK_THROWS_AS(CovMatrix(Matrix::from_rows({{1, 0.5}, {0.4, 1}})), Error);
}

TEST_CASE("normal quantile against the bisection oracle") {
  CHECK(std_normal_quantile(0.5) == 0.0);
  CHECK(std::abs(std_normal_quantile(0.975) - 1.959964) < 1e-6);
  CHECK(std::abs(std_normal_quantile(0.2) - (-0.841621)) < 1e-6);

  for (double u : {1e-300, 1e-15, 1e-6, 0.01, 0.2, 0.4999, 0.7, 0.99, 1 - 1e-10}) {
    const double x = std_normal_quantile(u);
    CHECK(std::abs(static_cast<double>(oracle::phi_cdf(x)) - u) <= 1e-12);
  }
}

TEST_CASE("normal cdf agrees with the long double oracle") {
  for (double x = -8.0; x <= 8.0; x += 0.125)
    CHECK(std::abs(std_normal_cdf(x) - static_cast<double>(oracle::phi_cdf(x))) <= 1e-15);
}

TEST_CASE("quantile inverts the cdf on [-6, 6]") {
  // Near +6 the cdf is within 1e-9 of 1, where one ulp of u already moves x by
  // more than 1e-9; the allowance below is that conditioning limit.
  for (double x = -6.0; x <= 6.0; x += 0.05) {
    const double u = std_normal_cdf(x);
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    const double conditioning = 2.0 * (std::nextafter(u, 2.0) - u) / pdf;
    CHECK(std::abs(std_normal_quantile(u) - x) <= 1e-9 + conditioning);
    if (x <= 0.0) CHECK(std::abs(std_normal_quantile(u) - x) <= 1e-9);
  }
}

TEST_CASE("quantile outside (0, 1) is a domain error") {
  for (double u : {0.0, 1.0, -0.1, 1.5}) {
    try {
      (void)std_normal_quantile(u);
      FAIL("expected DomainError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DomainError);
    }
  }
}

TEST_CASE("sample_mvn rows are antithetic and deterministic") {
  const Matrix lower = Matrix::identity(3);
  const DrawMatrix two = sample_mvn(lower, 2, {9, 1});
  for (std::size_t j = 0; j < 3; ++j) CHECK(two.row(1)[j] == -two.row(0)[j]);

  const DrawMatrix a = sample_mvn(lower, 1000, {9, 1});
  const DrawMatrix b = sample_mvn(lower, 1000, {9, 1});
  CHECK(a.rows() == b.rows());
  for (std::size_t i = 0; i < a.m(); i += 2)
    for (std::size_t j = 0; j < 3; ++j) {
      const double s = a.row(i)[j] + a.row(i + 1)[j];
      CHECK(s == 0.0);
    }
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < a.m(); ++i) CHECK(a.column(j)[i] == a.row(i)[j]);
}

TEST_CASE("odd draw counts are rejected") { CHECK_THROWS_AS(sample_mvn(Matrix::identity(2), 7, {1, 0}), Error); }

TEST_CASE("sample variance for sigma = 4") {
  const CovMatrix sigma(Matrix::from_rows({{4}}));
  const auto f = cholesky_factor(sigma);
  const DrawMatrix draws = sample_mvn(f.lower, 200000, {2024, 3});
  double ss = 0.0;
  for (double v : draws.column(0)) ss += v * v;
  const double var = ss / static_cast<double>(draws.m());
  CHECK(var >= 3.9);
  CHECK(var <= 4.1);
}

TEST_CASE("empirical covariance of correlated draws within 5 standard errors") {
  const CovMatrix sigma(Matrix::from_rows({{1.0, 0.6, -0.2}, {0.6, 2.0, 0.3}, {-0.2, 0.3, 0.5}}));
  const auto f = cholesky_factor(sigma);
  const DrawMatrix draws = sample_mvn(f.lower, 200000, {77, 0});
  const double m = static_cast<double>(draws.m());
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (double v : draws.column(j)) mean += v;
    CHECK(std::abs(mean / m) <= 5.0 * std::sqrt(sigma(j, j) / m));
    for (std::size_t k = 0; k < 3; ++k) {
      double c = 0.0;
      for (std::size_t i = 0; i < draws.m(); ++i) c += draws.row(i)[j] * draws.row(i)[k];
      c /= m;
      const double se = std::sqrt((sigma(j, j) * sigma(k, k) + sigma(j, k) * sigma(j, k)) / m);
      CHECK(std::abs(c - sigma(j, k)) <= 5.0 * se);
    }
  }
}

}  // TEST_SUITE
