#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "adanorm/linalg.hpp"

namespace adanorm {

/// Per-coordinate Wald summaries: z_j = sqrt(n) |psi_j| / sigma_j and
/// p_j = 2 (1 - Phi(z_j)) with sigma_j = sqrt(Sigma_jj).
struct WaldSummary {
  std::vector<double> z_scores;
  std::vector<double> p_values;
};

WaldSummary wald_pvalues(std::span<const double> psi_n, const CovMatrix& sigma_n, std::size_t n);

/// min(1, d * min_j p_j).
double bonferroni_p(std::span<const double> p_values);

enum class CauchyForm {
  Paper,      // d^-1 sum tan{(2 p_j - 3/2) pi}, poles at p = 1/2 and p = 1
  Canonical,  // d^-1 sum tan{(1/2 - p_j) pi}
};

struct CauchyResult {
  double statistic = 0.0;
  double p = 1.0;  // upper tail of the standard Cauchy: 1/2 - atan(statistic)/pi
};

/// Throws PoleInput when any p_j lies within 1e-12 of a pole of the chosen
/// transform, DomainError for p_j outside (0, 1], EmptyInput for no p-values.
CauchyResult cauchy_combination(std::span<const double> p_values, CauchyForm form = CauchyForm::Paper);

/// Comparator p-values attached to a test report. The Cauchy entry is empty
/// when the transform hit a pole.
struct ComparatorPValues {
  double bonferroni_p = 1.0;
  std::optional<double> cauchy_p;
  std::optional<double> cauchy_statistic;
  CauchyForm cauchy_form = CauchyForm::Paper;
};

ComparatorPValues comparator_pvalues(std::span<const double> psi_n, const CovMatrix& sigma_n, std::size_t n,
                                     CauchyForm form);

}  // namespace adanorm
