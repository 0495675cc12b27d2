#include "adanorm/comparators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "adanorm/error.hpp"
#include "adanorm/gauss.hpp"

namespace adanorm {

WaldSummary wald_pvalues(std::span<const double> psi_n, const CovMatrix& sigma_n, std::size_t n) {
  const std::size_t d = psi_n.size();
  if (sigma_n.dim() != d) fail(ErrorKind::DimensionMismatch, "psi and sigma dimensions differ");
  WaldSummary out{std::vector<double>(d), std::vector<double>(d)};
  const double root_n = std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < d; ++j) {
    const double var = sigma_n(j, j);
    if (!(var > 0.0)) fail(ErrorKind::DegenerateVariance, "non-positive variance for coordinate " + std::to_string(j));
    out.z_scores[j] = root_n * std::abs(psi_n[j]) / std::sqrt(var);
    // Far tails underflow; keep the p-value strictly positive.
    out.p_values[j] = std::max(2.0 * std_normal_sf(out.z_scores[j]), std::numeric_limits<double>::denorm_min());
  }
  return out;
}

double bonferroni_p(std::span<const double> p_values) {
  if (p_values.empty()) fail(ErrorKind::EmptyInput, "Bonferroni needs at least one p-value");
  const double smallest = *std::min_element(p_values.begin(), p_values.end());
  return std::min(1.0, static_cast<double>(p_values.size()) * smallest);
}

CauchyResult cauchy_combination(std::span<const double> p_values, CauchyForm form) {
  if (p_values.empty()) fail(ErrorKind::EmptyInput, "Cauchy combination needs at least one p-value");
  constexpr double kPoleTol = 1e-12;
  double sum = 0.0;
  for (double p : p_values) {
    if (!(p > 0.0 && p <= 1.0)) fail(ErrorKind::DomainError, "p-value outside (0,1]: " + std::to_string(p));
    double arg;
    if (form == CauchyForm::Paper) {
      if (p <= kPoleTol || std::abs(p - 0.5) <= kPoleTol || std::abs(p - 1.0) <= kPoleTol)
        fail(ErrorKind::PoleInput, "p-value " + std::to_string(p) + " is a pole of tan{(2p - 3/2) pi}");
      arg = (2.0 * p - 1.5) * std::numbers::pi;
    } else {
      if (p <= kPoleTol || std::abs(p - 1.0) <= kPoleTol)
        fail(ErrorKind::PoleInput, "p-value " + std::to_string(p) + " is a pole of tan{(1/2 - p) pi}");
      arg = (0.5 - p) * std::numbers::pi;
    }
    sum += std::tan(arg);
  }
  CauchyResult out;
  out.statistic = sum / static_cast<double>(p_values.size());
  out.p = 0.5 - std::atan(out.statistic) / std::numbers::pi;
  return out;
}

ComparatorPValues comparator_pvalues(std::span<const double> psi_n, const CovMatrix& sigma_n, std::size_t n,
                                     CauchyForm form) {
  const WaldSummary wald = wald_pvalues(psi_n, sigma_n, n);
  ComparatorPValues out;
  out.cauchy_form = form;
  out.bonferroni_p = bonferroni_p(wald.p_values);
  try {
    const CauchyResult c = cauchy_combination(wald.p_values, form);
    out.cauchy_p = c.p;
    out.cauchy_statistic = c.statistic;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::PoleInput) throw;
  }
  return out;
}

}  // namespace adanorm
