// Times calibrate_null with the serial reference kernels against the blocked
// kernels run across OpenMP threads, and checks that both give the same null
// sample.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "adanorm/testkit.hpp"

namespace {

adanorm::CovMatrix equicorrelated(std::size_t d, double rho) {
  adanorm::Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = i == j ? 1.0 : rho;
  return adanorm::CovMatrix(std::move(m));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"calibrate_null: reference vs blocked kernels"};
  std::size_t d = 10;
  std::size_t m_inner = 5000;
  std::size_t m_outer = 2000;
  double rho = 0.3;
  std::string measure = "mf";
  std::string family_text = "lp";
  bool skip_reference = false;
  app.add_option("--d", d);
  app.add_option("--m-inner", m_inner);
  app.add_option("--m-outer", m_outer);
  app.add_option("--rho", rho);
  app.add_option("--measure", measure)->check(CLI::IsMember({"ar", "mf"}));
  app.add_option("--family", family_text);
  app.add_flag("--skip-reference", skip_reference);
  CLI11_PARSE(app, argc, argv);

  adanorm::MeasureConfig cfg;
  cfg.kind = measure == "ar" ? adanorm::MeasureKind::AcceptanceRate : adanorm::MeasureKind::MultiplicativeFactor;
  cfg.m_inner = m_inner;
  cfg.m_outer = m_outer;
  const auto family = adanorm::parse_family(family_text, d);
  const auto sigma = equicorrelated(d, rho);
  const adanorm::SeededStream seed{2024, 0};

  auto t0 = std::chrono::steady_clock::now();
  const auto blocked = adanorm::calibrate_null(sigma, family, cfg, seed, {adanorm::Engine::Blocked, true});
  const double t_blocked = seconds_since(t0);
  std::printf("family=%s d=%zu m_inner=%zu m_outer=%zu measure=%s\n",
              adanorm::family_fingerprint(family).c_str(), d, m_inner, m_outer, measure.c_str());
  std::printf("blocked+openmp  %8.3f s\n", t_blocked);

  // The p-value path: counts of Zbar <= z decided without full searches.
  for (const double q : {0.05, 0.5}) {
    const double z = blocked.null_z_sorted[static_cast<std::size_t>(q * static_cast<double>(m_outer))];
    t0 = std::chrono::steady_clock::now();
    const std::size_t fast = adanorm::count_null_at_most(sigma, family, cfg, seed, z);
    const double t_fast = seconds_since(t0);
    const auto full = static_cast<std::size_t>(
        std::upper_bound(blocked.null_z_sorted.begin(), blocked.null_z_sorted.end(), z) - blocked.null_z_sorted.begin());
    std::printf("count <= q%.2f   %8.3f s   count %zu (full sample %zu)\n", q, t_fast, fast, full);
    if (fast != full) return 1;
  }

  if (!skip_reference) {
    t0 = std::chrono::steady_clock::now();
    const auto reference = adanorm::calibrate_null(sigma, family, cfg, seed, {adanorm::Engine::Reference, false});
    const double t_reference = seconds_since(t0);
    std::printf("reference       %8.3f s   speedup %.1fx\n", t_reference, t_reference / t_blocked);
    const bool same = reference.null_z_sorted == blocked.null_z_sorted;
    std::printf("null samples identical: %s\n", same ? "yes" : "NO");
    if (!same) return 1;
  }
  return 0;
}
