#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adanorm/gauss.hpp"
#include "adanorm/kernels.hpp"
#include "adanorm/norms.hpp"

namespace adanorm {

enum class MeasureKind { AcceptanceRate, MultiplicativeFactor };

/// Which kernels evaluate the measures. Reference is the plain serial path
/// kept for testing; both give identical results.
enum class Engine { Blocked, Reference };

struct MeasureConfig {
  MeasureKind kind = MeasureKind::MultiplicativeFactor;
  double alpha = 0.05;
  double tau = 0.2;                 // type II target, multiplicative factor only
  std::size_t m_inner = 5000;       // draws behind each Gamma evaluation and c0
  std::size_t m_outer = 2000;       // null draws of the adaptive statistic
  double bisect_rel_tol = 1e-6;
  int max_doublings = 60;

  /// Throws DomainError unless 0 < alpha < 1, 0 < tau < 1 - alpha and both
  /// budgets are even and >= 2.
  void validate() const;

  kernels::RaySearch ray_search() const { return {tau, bisect_rel_tol, max_doublings}; }
};

/// Critical value c0 of one norm against a draw matrix.
struct NormCalibration {
  NormSpec spec;
  double c0 = 0.0;                          // ceil((1-alpha) m)-th smallest norm value
  double gauge_c0 = 0.0;                    // the same order statistic on the gauge scale
  std::vector<double> sorted_norm_values;   // ascending phi(u_i)
  std::vector<double> row_gauges;           // gauge(u_i) in draw order

  kernels::NormDraws bind(const DrawMatrix& draws) const { return {draws, spec, gauge_c0, row_gauges}; }
};

/// 1-based rank ceil((1 - alpha) m) of the critical order statistic, clamped to [1, m].
std::size_t critical_rank(std::size_t m, double alpha);

/// The ceil((1-alpha) m)-th smallest of `values` (any order).
double critical_order_statistic(std::span<const double> values, double alpha);

NormCalibration critical_value(const NormSpec& spec, const DrawMatrix& draws, double alpha);

/// (1/m) #{i : phi(u_i + x) <= c0}. Ties at c0 count as accepted.
double acceptance_rate(std::span<const double> x, const NormCalibration& cal, const DrawMatrix& draws,
                       Engine engine = Engine::Blocked);

/// min{s >= 0 : acceptance_rate(s x) <= tau} with common draws at every s;
/// +inf at x = 0 or when no bracket is found within max_doublings.
double multiplicative_factor(std::span<const double> x, const NormCalibration& cal, const DrawMatrix& draws,
                             const MeasureConfig& cfg, Engine engine = Engine::Blocked);

/// measure(x) <= z without completing the multiplicative-factor search when
/// the answer is already determined.
bool measure_at_most(std::span<const double> x, const NormCalibration& cal, const DrawMatrix& draws,
                     const MeasureConfig& cfg, double z, Engine engine = Engine::Blocked);

/// Dispatches on cfg.kind.
double measure(std::span<const double> x, const NormCalibration& cal, const DrawMatrix& draws,
               const MeasureConfig& cfg, Engine engine = Engine::Blocked);

}  // namespace adanorm
