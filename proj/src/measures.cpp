#include "adanorm/measures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adanorm/error.hpp"

namespace adanorm {

void MeasureConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::DomainError, "alpha must lie in (0,1)");
  if (kind == MeasureKind::MultiplicativeFactor && !(tau > 0.0 && tau < 1.0 - alpha))
    fail(ErrorKind::DomainError, "tau must lie in (0, 1 - alpha)");
  for (std::size_t budget : {m_inner, m_outer})
    if (budget < 2 || budget % 2 != 0) fail(ErrorKind::DomainError, "Monte Carlo budgets must be even and >= 2");
  if (!(bisect_rel_tol > 0.0)) fail(ErrorKind::DomainError, "bisection tolerance must be positive");
  if (max_doublings < 0) fail(ErrorKind::DomainError, "max_doublings must be non-negative");
}

std::size_t critical_rank(std::size_t m, double alpha) {
  const double target = (1.0 - alpha) * static_cast<double>(m);
  const auto rank = static_cast<std::size_t>(std::ceil(target - 1e-9));
  return std::clamp<std::size_t>(rank, 1, m);
}

double critical_order_statistic(std::span<const double> values, double alpha) {
  if (values.empty()) fail(ErrorKind::EmptyInput, "no values for a critical value");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t r = critical_rank(v.size(), alpha);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(r - 1), v.end());
  return v[r - 1];
}

NormCalibration critical_value(const NormSpec& spec, const DrawMatrix& draws, double alpha) {
  if (draws.m() == 0) fail(ErrorKind::EmptyInput, "empty draw matrix");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::DomainError, "alpha must lie in (0,1)");
  spec.check_dimension(draws.dim());

  NormCalibration cal{spec, 0.0, 0.0, {}, std::vector<double>(draws.m())};
  const std::vector<double> zero(draws.dim(), 0.0);
  kernels::blocked::row_gauges({draws, spec, 0.0, {}}, zero, cal.row_gauges);

  std::vector<double> sorted = cal.row_gauges;
  std::sort(sorted.begin(), sorted.end());
  cal.gauge_c0 = sorted[critical_rank(sorted.size(), alpha) - 1];
  cal.c0 = gauge::to_norm(spec, cal.gauge_c0);
  cal.sorted_norm_values.resize(sorted.size());
  std::transform(sorted.begin(), sorted.end(), cal.sorted_norm_values.begin(),
                 [&](double g) { return gauge::to_norm(spec, g); });
  return cal;
}

double acceptance_rate(std::span<const double> x, const NormCalibration& cal, const DrawMatrix& draws,
                       Engine engine) {
  const auto nd = cal.bind(draws);
  const std::size_t count = engine == Engine::Reference ? kernels::reference::count_accepted(nd, x)
                                                        : kernels::blocked::count_accepted(nd, x);
  return static_cast<double>(count) / static_cast<double>(draws.m());
}

double multiplicative_factor(std::span<const double> x, const NormCalibration& cal, const DrawMatrix& draws,
                             const MeasureConfig& cfg, Engine engine) {
  const auto nd = cal.bind(draws);
  const auto search = cfg.ray_search();
  return engine == Engine::Reference ? kernels::reference::multiplicative_factor(nd, x, search)
                                     : kernels::blocked::multiplicative_factor(nd, x, search);
}

double measure(std::span<const double> x, const NormCalibration& cal, const DrawMatrix& draws,
               const MeasureConfig& cfg, Engine engine) {
  return cfg.kind == MeasureKind::AcceptanceRate ? acceptance_rate(x, cal, draws, engine)
                                                 : multiplicative_factor(x, cal, draws, cfg, engine);
}

bool measure_at_most(std::span<const double> x, const NormCalibration& cal, const DrawMatrix& draws,
                     const MeasureConfig& cfg, double z, Engine engine) {
  if (cfg.kind == MeasureKind::AcceptanceRate) return acceptance_rate(x, cal, draws, engine) <= z;
  const auto nd = cal.bind(draws);
  const auto search = cfg.ray_search();
  return engine == Engine::Reference ? kernels::reference::factor_at_most(nd, x, search, z)
                                     : kernels::blocked::factor_at_most(nd, x, search, z);
}

}  // namespace adanorm
