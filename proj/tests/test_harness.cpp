#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "adanorm/error.hpp"
#include "adanorm/harness.hpp"

using namespace adanorm;

namespace {

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("example 1 setting 1 has no signal") {
  const auto data = generate_example1(10000, 10, 0.0, 1, {81, 0});
  for (std::size_t j = 0; j < 10; ++j) {
    const double r = corr(data.w.column(j), data.y);
    CHECK(r >= -0.1);
    CHECK(r <= 0.1);
  }
}

TEST_CASE("independent covariates at rho = 0, equicorrelated otherwise") {
  for (double rho : {0.0, 0.5}) {
    const auto data = generate_example1(10000, 4, rho, 1, {82, 0});
    for (std::size_t j = 0; j < 4; ++j) {
      const auto cj = data.w.column(j);
      CHECK(std::abs(mean(cj)) <= 3.0 * std::sqrt(1.0 / 10000));
      for (std::size_t k = j + 1; k < 4; ++k) {
        const auto ck = data.w.column(k);
        double c = 0.0;
        for (std::size_t i = 0; i < 10000; ++i) c += cj[i] * ck[i];
        c /= 10000.0;
        CHECK(std::abs(c - rho) <= 0.05);
      }
    }
  }
}

TEST_CASE("setting 2 population correlation") {
  const auto data = generate_example1(100000, 10, 0.0, 2, {83, 0});
  CHECK(std::abs(corr(data.w.column(0), data.y) - 0.25 / std::sqrt(1.0625)) <= 0.01);
}

TEST_CASE("coefficient patterns") {
  const auto b3 = example1_coefficients(3, 10);
  CHECK(b3[0] == 0.15);
  CHECK(b3[4] == 0.15);
  CHECK(b3[5] == -0.1);
  CHECK(b3[9] == -0.1);
  CHECK(example1_coefficients(2, 10)[0] == 0.25);
  CHECK(example2_coefficients(2, 10)[0] == 0.6);
  CHECK(example2_coefficients(1, 10) == std::vector<double>(10, 0.0));
  CHECK_THROWS_AS(example1_coefficients(3, 9), Error);
  CHECK_THROWS_AS(example1_coefficients(4, 10), Error);
  CHECK_THROWS_AS(example2_coefficients(5, 10), Error);
  CHECK_THROWS_AS(example2_coefficients(4, 5), Error);
}

TEST_CASE("example 2 setting 1 moments") {
  const std::size_t n = 10000, d = 10;
  const auto data = generate_example2(n, d, 1, {84, 0});
  double observed = 0, positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(data.u[i] == data.delta[i] * data.u[i]);
    if (data.delta[i] == 1.0) {
      ++observed;
      positive += data.u[i];
    }
  }
  CHECK(std::abs(positive / observed - 0.5) <= 0.02);

  // Oracle for E[Delta]: Monte Carlo over the equicorrelated (W_{d-1}, W_d)
  // pair, variance 1 and covariance 0.5.
  Xoshiro256pp gen({85, 0});
  std::vector<double> z(3);
  double expected = 0.0;
  const std::size_t draws = 1000000;
  for (std::size_t i = 0; i < draws; ++i) {
    standard_normals(gen, z);
    const double a = std::sqrt(0.5) * z[0] + std::sqrt(0.5) * z[1];
    const double b = std::sqrt(0.5) * z[0] + std::sqrt(0.5) * z[2];
    expected += expit(0.5 + 0.15 * a - 0.275 * b);
  }
  expected /= static_cast<double>(draws);
  CHECK(std::abs(mean(data.delta) - expected) <= 0.02);
}

TEST_CASE("example 2 setting 2 has signal among observed outcomes") {
  const auto data = generate_example2(10000, 10, 2, {86, 0});
  std::vector<double> w1, u;
  for (std::size_t i = 0; i < 10000; ++i)
    if (data.delta[i] == 1.0) {
      w1.push_back(data.w(i, 0));
      u.push_back(data.u[i]);
    }
  const double r = corr(w1, u);
  CHECK(r > 3.0 / std::sqrt(static_cast<double>(w1.size())));
}

TEST_CASE("invalid settings") {
  CHECK_THROWS_AS(generate_example1(10, 5, 0.0, 3, {1, 0}), Error);
  CHECK_THROWS_AS(generate_example2(10, 10, 0, {1, 0}), Error);
  ExperimentConfig cfg;
  cfg.rho = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.example = 2;
  cfg.tests = {TestKind::Permutation};
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("Wilson interval") {
  const auto [lo, hi] = wilson_interval(5, 100);
  CHECK(lo == doctest::Approx(0.02154).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.11175).epsilon(1e-3));
  const auto [z0, z1] = wilson_interval(0, 0);
  CHECK(z0 == 0.0);
  CHECK(z1 == 1.0);
}

TEST_CASE("zero replicates give an empty table") {
  ExperimentConfig cfg;
  cfg.reps = 0;
  const auto result = run_experiment(cfg);
  CHECK(result.rows.empty());
  std::ostringstream out;
  write_csv(out, result.rows);
  CHECK(out.str() == "test,setting,n,d,rho,reps,reject_rate,ci_lo,ci_hi\n");
}

TEST_CASE("experiment config round-trips through JSON") {
  ExperimentConfig cfg;
  cfg.example = 2;
  cfg.setting = 3;
  cfg.tests = {TestKind::AdaptiveSsq, TestKind::Cauchy};
  cfg.measure.kind = MeasureKind::AcceptanceRate;
  cfg.seed = 99;
  const auto back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(parse_test_kind("adaptive-ssq") == TestKind::AdaptiveSsq);
  CHECK_THROWS_AS(parse_test_kind("nope"), Error);
}

TEST_CASE("small experiment is deterministic and thread independent") {
  ExperimentConfig cfg;
  cfg.n = 60;
  cfg.d = 4;
  cfg.reps = 8;
  cfg.tests = {TestKind::AdaptiveLp, TestKind::L2, TestKind::Bonferroni, TestKind::Cauchy};
  cfg.measure.m_inner = 400;
  cfg.measure.m_outer = 100;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  std::ostringstream sa, sb;
  write_csv(sa, a.rows);
  write_csv(sb, b.rows);
  CHECK(sa.str() == sb.str());
  CHECK(a.rows.size() == 4);
  for (const auto& row : a.rows) {
    CHECK(row.reps == 8);
    CHECK(row.ci_lo <= row.reject_rate);
    CHECK(row.reject_rate <= row.ci_hi);
  }
}

}  // TEST_SUITE
