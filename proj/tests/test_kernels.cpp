#include <doctest.h>

#include <cmath>
#include <vector>

#include "adanorm/gauss.hpp"
#include "adanorm/kernels.hpp"
#include "adanorm/measures.hpp"

using namespace adanorm;

TEST_SUITE("kernels") {

// The blocked kernels must reproduce the serial reference exactly: counts,
// row gauges and search results, for every norm kind and for draw counts
// that do not fill the last block.
TEST_CASE("blocked and reference kernels agree bit for bit") {
  Xoshiro256pp gen({31, 0});
  const std::vector<std::size_t> dims{1, 2, 3, 7, 10, 13};
  for (std::size_t d : dims) {
    Matrix s(d, d, 0.25);
    for (std::size_t j = 0; j < d; ++j) s(j, j) = 1.0;
    const CovMatrix sigma(s);
    const DrawMatrix draws = sample_mvn(cholesky_factor(sigma).lower, 1002, {32, d}, sigma);

    std::vector<NormSpec> specs{NormSpec::lp(1), NormSpec::lp(2), NormSpec::lp(4), NormSpec::lp(6),
                                NormSpec::lp(3), NormSpec::linf()};
    for (std::size_t k = 1; k <= d; k += (d > 4 ? 3 : 1)) specs.push_back(NormSpec::sum_squares(k));
    specs.push_back(NormSpec::sum_squares(d));

    for (const auto& spec : specs) {
      CAPTURE(spec.name());
      CAPTURE(d);
      const auto cal = critical_value(spec, draws, 0.05);
      const auto nd = cal.bind(draws);
      for (int t = 0; t < 6; ++t) {
        std::vector<double> x(d);
        for (double& v : x) v = 2.5 * (gen.uniform_open() - 0.5);

        CHECK(kernels::blocked::count_accepted(nd, x) == kernels::reference::count_accepted(nd, x));

        std::vector<double> g(draws.m());
        kernels::blocked::row_gauges(nd, x, g);
        std::vector<double> shifted(d);
        bool rows_equal = true;
        for (std::size_t i = 0; i < draws.m(); ++i) {
          for (std::size_t j = 0; j < d; ++j) shifted[j] = draws.row(i)[j] + x[j];
          rows_equal = rows_equal && g[i] == gauge::of_vector(spec, shifted);
        }
        CHECK(rows_equal);

        const kernels::RaySearch search{0.2, 1e-6, 60};
        const double ref = kernels::reference::multiplicative_factor(nd, x, search);
        CHECK(kernels::blocked::multiplicative_factor(nd, x, search) == ref);
        for (double z : {0.9 * ref, ref, 1.1 * ref}) {
          CHECK(kernels::blocked::factor_at_most(nd, x, search, z) == (ref <= z));
          CHECK(kernels::reference::factor_at_most(nd, x, search, z) == (ref <= z));
        }
      }
    }
  }
}

TEST_CASE("engines agree through the measure interface") {
  const DrawMatrix draws = sample_mvn(Matrix::identity(3), 600, {33, 0});
  MeasureConfig cfg;
  const std::vector<double> x{0.4, -0.1, 0.7};
  for (const auto& spec : default_family(FamilyKind::SumSquares, 3)) {
    const auto cal = critical_value(spec, draws, 0.05);
    CHECK(acceptance_rate(x, cal, draws, Engine::Blocked) == acceptance_rate(x, cal, draws, Engine::Reference));
    CHECK(multiplicative_factor(x, cal, draws, cfg, Engine::Blocked) ==
          multiplicative_factor(x, cal, draws, cfg, Engine::Reference));
  }
}

}  // TEST_SUITE
