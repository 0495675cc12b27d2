#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "adanorm/error.hpp"
#include "adanorm/gauss.hpp"
#include "adanorm/measures.hpp"
#include "oracles.hpp"

using namespace adanorm;

namespace {

DrawMatrix draws_for(const CovMatrix& sigma, std::size_t m, std::uint64_t seed) {
  return sample_mvn(cholesky_factor(sigma).lower, m, {seed, 0}, sigma);
}

MeasureConfig mf_config() {
  MeasureConfig cfg;
  cfg.kind = MeasureKind::MultiplicativeFactor;
  return cfg;
}

}  // namespace

TEST_SUITE("measures") {

TEST_CASE("critical order statistic") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(critical_order_statistic(v, 0.05) == 95.0);
  CHECK(critical_rank(100, 0.05) == 95);
  CHECK(critical_rank(10, 0.999) == 1);

  const DrawMatrix two_point = DrawMatrix::from_base_rows(Matrix::from_rows({{1}, {3}}));
  const auto cal = critical_value(NormSpec::lp(1), two_point, 0.5);
  CHECK(cal.c0 == 1.0);
  CHECK(cal.sorted_norm_values == std::vector<double>{1, 1, 3, 3});
}

TEST_CASE("c0 for d = 1 is near the normal quantile") {
  const DrawMatrix draws = draws_for(CovMatrix::identity(1), 200000, 11);
  const auto cal = critical_value(NormSpec::lp(1), draws, 0.05);
  CHECK(cal.c0 >= 1.95);
  CHECK(cal.c0 <= 1.97);
  std::size_t covered = 0;
  for (double v : cal.sorted_norm_values) covered += v <= cal.c0;
  CHECK(static_cast<double>(covered) >= 0.95 * 200000);
}

TEST_CASE("acceptance rate at the origin is at least 1 - alpha") {
  const DrawMatrix draws = draws_for(CovMatrix::identity(4), 5000, 12);
  for (const auto& spec : default_family(FamilyKind::Lp, 4)) {
    const auto cal = critical_value(spec, draws, 0.05);
    const std::vector<double> zero(4, 0.0);
    const double a = acceptance_rate(zero, cal, draws);
    CHECK(a >= 0.95);
    CHECK(a <= 0.95 + 3.0 * std::sqrt(0.05 * 0.95 / 5000));
  }
}

TEST_CASE("d = 1 acceptance rate against the closed form") {
  const DrawMatrix draws = draws_for(CovMatrix::identity(1), 200000, 13);
  const auto cal = critical_value(NormSpec::lp(1), draws, 0.05);
  const std::vector<double> x{1.959964};
  const double expected = static_cast<double>(oracle::acceptance_1d(1.959964L, 1.959964L));
  CHECK(std::abs(expected - 0.49996) < 5e-5);
  const double se = std::sqrt(expected * (1 - expected) / 200000);
  CHECK(std::abs(acceptance_rate(x, cal, draws) - expected) <= 3.0 * se);
}

TEST_CASE("d = 1 multiplicative factor against the root-finder oracle") {
  const long double c = oracle::normal_quantile(0.975L);
  const long double s_star = oracle::bisect([c](long double s) { return oracle::acceptance_1d(c, s) - 0.2L; }, 0, 10);
  CHECK(std::abs(static_cast<double>(s_star) - 2.8016) < 1e-3);

  const DrawMatrix draws = draws_for(CovMatrix::identity(1), 200000, 14);
  const auto cal = critical_value(NormSpec::lp(1), draws, 0.05);
  const double mf = multiplicative_factor(std::vector<double>{1.0}, cal, draws, mf_config());
  CHECK(std::abs(mf / static_cast<double>(s_star) - 1.0) <= 1e-2);
}

TEST_CASE("d = 2 acceptance rate against quadrature") {
  Xoshiro256pp gen({15, 0});
  for (double r : {0.0, 0.8}) {
    const CovMatrix sigma(Matrix::from_rows({{1, r}, {r, 1}}));
    const DrawMatrix draws = draws_for(sigma, 200000, 16);
    for (bool use_l2 : {true, false}) {
      const NormSpec spec = use_l2 ? NormSpec::lp(2) : NormSpec::linf();
      const auto cal = critical_value(spec, draws, 0.05);
      const double c = cal.c0;
      auto half_width = [use_l2, c](double v0) { return use_l2 ? std::sqrt(c * c - v0 * v0) : c; };
      for (int t = 0; t < 3; ++t) {
        const std::vector<double> x{4.0 * gen.uniform_open() - 2.0, 4.0 * gen.uniform_open() - 2.0};
        const double quad = oracle::acceptance_2d(half_width, c, x[0], x[1], r);
        CHECK(std::abs(acceptance_rate(x, cal, draws) - quad) <= 5e-3);
      }
    }
  }
}

TEST_CASE("central symmetry is exact for both measures") {
  const CovMatrix sigma(Matrix::from_rows({{1, 0.3, 0}, {0.3, 1, -0.2}, {0, -0.2, 2}}));
  const DrawMatrix draws = draws_for(sigma, 4000, 17);
  Xoshiro256pp gen({18, 0});
  const auto cfg = mf_config();
  for (const auto& spec : {NormSpec::lp(1), NormSpec::lp(6), NormSpec::linf(), NormSpec::sum_squares(2)}) {
    const auto cal = critical_value(spec, draws, 0.05);
    for (int t = 0; t < 10; ++t) {
      std::vector<double> x(3), neg(3);
      for (std::size_t j = 0; j < 3; ++j) {
        x[j] = 3.0 * (gen.uniform_open() - 0.5);
        neg[j] = -x[j];
      }
      CHECK(acceptance_rate(x, cal, draws) == acceptance_rate(neg, cal, draws));
      CHECK(multiplicative_factor(x, cal, draws, cfg) == multiplicative_factor(neg, cal, draws, cfg));
    }
  }
}

TEST_CASE("multiplicative factor scales inversely") {
  const DrawMatrix draws = draws_for(CovMatrix::identity(5), 5000, 19);
  const auto cfg = mf_config();
  Xoshiro256pp gen({20, 0});
  for (const auto& spec : {NormSpec::lp(2), NormSpec::linf(), NormSpec::sum_squares(3)}) {
    const auto cal = critical_value(spec, draws, 0.05);
    std::vector<double> x(5);
    for (double& v : x) v = gen.uniform_open() - 0.5;
    const double base = multiplicative_factor(x, cal, draws, cfg);
    for (double beta : {0.5, 2.0, 10.0}) {
      std::vector<double> bx(5);
      for (std::size_t j = 0; j < 5; ++j) bx[j] = beta * x[j];
      CHECK(std::abs(multiplicative_factor(bx, cal, draws, cfg) * beta / base - 1.0) <= 2 * cfg.bisect_rel_tol);
    }
  }
}

TEST_CASE("ray monotonicity of the acceptance rate") {
  const DrawMatrix draws = draws_for(CovMatrix::identity(3), 5000, 21);
  Xoshiro256pp gen({22, 0});
  for (const auto& spec : {NormSpec::lp(1), NormSpec::lp(2), NormSpec::linf()}) {
    const auto cal = critical_value(spec, draws, 0.05);
    for (int t = 0; t < 5; ++t) {
      std::vector<double> v(3);
      double norm = 0.0;
      for (double& c : v) {
        c = gen.uniform_open() - 0.5;
        norm += c * c;
      }
      for (double& c : v) c /= std::sqrt(norm);
      double prev = 1.0;
      for (double beta = 0.0; beta <= 6.0; beta += 0.1) {
        std::vector<double> x(3);
        for (std::size_t j = 0; j < 3; ++j) x[j] = beta * v[j];
        // Common draws make the estimate non-increasing up to one draw.
        const double a = acceptance_rate(x, cal, draws);
        CHECK(a <= prev + 1.0 / 5000);
        prev = a;
      }
    }
  }
}

TEST_CASE("measures vanish far from the origin") {
  const std::size_t m = 5000;
  const DrawMatrix draws = draws_for(CovMatrix::identity(3), m, 23);
  const std::vector<double> x{50.0, 0.0, 0.0};
  // The factor decays like 1/|x| from about 2.8 at |x| = 1 (d = 1 closed form)
  // and more in higher dimension, so 0.05 is reached near |x| = 100.
  const std::vector<double> far{100.0, 0.0, 0.0};
  for (const auto& spec : {NormSpec::lp(2), NormSpec::linf()}) {
    const auto cal = critical_value(spec, draws, 0.05);
    CHECK(acceptance_rate(x, cal, draws) <= 1.0 / m);
    const double mf = multiplicative_factor(x, cal, draws, mf_config());
    CHECK(mf <= 0.1);
    CHECK(multiplicative_factor(far, cal, draws, mf_config()) <= 0.05);
    CHECK(multiplicative_factor(far, cal, draws, mf_config()) == doctest::Approx(mf / 2).epsilon(2e-6));
  }
}

TEST_CASE("multiplicative factor at the origin is infinite") {
  const DrawMatrix draws = draws_for(CovMatrix::identity(2), 1000, 24);
  const auto cal = critical_value(NormSpec::lp(2), draws, 0.05);
  const std::vector<double> zero{0.0, 0.0};
  CHECK(std::isinf(multiplicative_factor(zero, cal, draws, mf_config())));
  CHECK(std::isinf(multiplicative_factor(zero, cal, draws, mf_config(), Engine::Reference)));
}

TEST_CASE("decision path agrees with the full search") {
  const DrawMatrix draws = draws_for(CovMatrix::identity(4), 2000, 25);
  const auto cfg = mf_config();
  Xoshiro256pp gen({26, 0});
  for (const auto& spec : {NormSpec::lp(1), NormSpec::lp(4), NormSpec::sum_squares(2)}) {
    const auto cal = critical_value(spec, draws, 0.05);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> x(4);
      for (double& v : x) v = 2.0 * (gen.uniform_open() - 0.5);
      const double full = multiplicative_factor(x, cal, draws, cfg);
      for (double z : {0.5 * full, full, std::nextafter(full, 0.0), 1.5 * full, 0.0,
                       std::numeric_limits<double>::infinity()}) {
        CHECK(measure_at_most(x, cal, draws, cfg, z) == (full <= z));
        CHECK(measure_at_most(x, cal, draws, cfg, z, Engine::Reference) == (full <= z));
      }
    }
  }
}

TEST_CASE("configuration validation") {
  MeasureConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.tau = 0.96;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.m_inner = 5001;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("shift of the wrong dimension") {
  const DrawMatrix draws = draws_for(CovMatrix::identity(2), 100, 27);
  const auto cal = critical_value(NormSpec::lp(2), draws, 0.05);
  CHECK_THROWS_AS(acceptance_rate(std::vector<double>{1, 2, 3}, cal, draws), Error);
}

}  // TEST_SUITE
