#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adanorm/comparators.hpp"
#include "adanorm/estimators.hpp"
#include "adanorm/gauss.hpp"
#include "adanorm/measures.hpp"
#include "adanorm/norms.hpp"

namespace adanorm {

/// Z = min_k Gamma(u, phi_k); selected is the first index attaining it.
struct AdaptiveValue {
  double z = 0.0;
  std::vector<double> per_norm;
  std::size_t selected = 0;
};

AdaptiveValue adaptive_statistic(std::span<const double> u, std::span<const NormCalibration> cals,
                                 const DrawMatrix& draws, const MeasureConfig& cfg, Engine engine = Engine::Blocked);

/// The shared inner draw set and per-norm critical values.
struct InnerCalibration {
  DrawMatrix draws;
  std::vector<NormCalibration> cals;
};

InnerCalibration calibrate_inner(DrawMatrix draws, std::span<const NormSpec> family, double alpha);

struct CalibrationSeeds {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
  std::uint64_t base = 0;  // parent of the inner stream {base, 0} and outer streams {base, m + 1}
};

struct CalibrationResult {
  std::vector<NormSpec> family;
  InnerCalibration inner;
  std::vector<double> null_z_sorted;
  double threshold = 0.0;
  double alpha = 0.05;
  MeasureConfig cfg;
  CalibrationSeeds seeds;
  double jitter = 0.0;

  std::string family_fingerprint() const { return adanorm::family_fingerprint(family); }
};

struct CalibrationOptions {
  Engine engine = Engine::Blocked;
  bool parallel = true;  // OpenMP across outer draws
};

/// 1-based rank floor(alpha * m) of the rejection threshold, at least 1.
std::size_t threshold_rank(std::size_t m, double alpha);

/// Nested Monte Carlo null law of Z_n under N(0, sigma_n).
CalibrationResult calibrate_null(const CovMatrix& sigma_n, std::span<const NormSpec> family, const MeasureConfig& cfg,
                                 SeededStream seed, CalibrationOptions options = {});

/// #{m : Zbar_m <= z} over exactly the outer draws of calibrate_null with the
/// same arguments, deciding each comparison without computing Zbar_m in full.
std::size_t count_null_at_most(const CovMatrix& sigma_n, std::span<const NormSpec> family, const MeasureConfig& cfg,
                               SeededStream seed, double z, CalibrationOptions options = {});

/// (1 + #{m : Zbar_m <= z}) / (m_outer + 1).
double p_value(double z, std::span<const double> null_sorted);
double p_value(double z, const CalibrationResult& calib);

struct TestReport {
  std::vector<double> u_n;
  double z_n = 0.0;
  std::vector<NormSpec> family;
  std::vector<double> per_norm_gamma;
  std::size_t selected_norm = 0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  std::optional<ComparatorPValues> comparators;
  CalibrationSeeds seeds;
  MeasureConfig cfg;
  std::size_t n = 0;
  SigmaSource sigma_source = SigmaSource::InfluenceFunction;
  std::string family_fingerprint;
  std::string calibration;  // "parametric-bootstrap" or "permutation"
  std::size_t n_perm = 0;
};

struct TestOptions {
  CauchyForm cauchy_form = CauchyForm::Paper;
  CalibrationOptions calibration;
};

/// U_n = sqrt(n) psi_n, calibrated Z_n, p-value and decision. Comparators are
/// attached when sigma_n comes from influence functions.
TestReport run_test(const EstimateResult& est, std::span<const NormSpec> family, const MeasureConfig& cfg,
                    SeededStream seed, TestOptions options = {});

/// Correlation test calibrated by permuting y. Each permutation recomputes
/// psi_n and Sigma_n; the inner standard normals are shared, so every
/// permutation uses the same calibration seed.
TestReport permutation_test(const Matrix& w, std::span<const double> y, std::span<const NormSpec> family,
                            const MeasureConfig& cfg, std::size_t n_perm, SeededStream seed,
                            TestOptions options = {});

nlohmann::json to_json(const TestReport& report);

}  // namespace adanorm
