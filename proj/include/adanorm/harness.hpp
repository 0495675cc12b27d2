#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "adanorm/comparators.hpp"
#include "adanorm/linalg.hpp"
#include "adanorm/measures.hpp"
#include "adanorm/rng.hpp"

namespace adanorm {

struct Example1Data {
  Matrix w;
  std::vector<double> y;
};

struct Example2Data {
  Matrix w;
  std::vector<double> u;
  std::vector<double> delta;
};

/// Regression coefficients of Y on W for Example 1 (setting 1, 2 or 3).
std::vector<double> example1_coefficients(int setting, std::size_t d);

/// Logistic coefficients of Y on W for Example 2 (setting 1 to 4).
std::vector<double> example2_coefficients(int setting, std::size_t d);

/// W ~ N(0, (1 - rho) I + rho 11^T) by the one-factor form, Y = beta^T W + eps.
Example1Data generate_example1_linear(std::size_t n, double rho, const std::vector<double>& beta, SeededStream stream);
Example1Data generate_example1(std::size_t n, std::size_t d, double rho, int setting, SeededStream stream);

/// W equicorrelated at 0.5, Y ~ Bernoulli(expit(beta^T W)),
/// Delta ~ Bernoulli(expit(0.5 + 0.15 W_{d-1} - 0.275 W_d)), U = Delta Y.
Example2Data generate_example2(std::size_t n, std::size_t d, int setting, SeededStream stream);

enum class TestKind { AdaptiveLp, AdaptiveSsq, L2, LInf, Bonferroni, Cauchy, Permutation };

std::string to_string(TestKind kind);
TestKind parse_test_kind(const std::string& text);

struct ExperimentConfig {
  int example = 1;
  int setting = 1;
  std::size_t n = 100;
  std::size_t d = 10;
  double rho = 0.0;
  std::size_t reps = 100;
  std::vector<TestKind> tests{TestKind::AdaptiveLp};
  MeasureConfig measure;
  std::uint64_t seed = 1;
  double signal_scale = 1.0;  // multiplies the Example 1 coefficients
  std::size_t n_perm = 199;
  std::size_t b_reps = 400;
  CauchyForm cauchy_form = CauchyForm::Paper;

  /// Throws InvalidSetting or DomainError.
  void validate() const;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct RejectionRow {
  std::string test;
  int setting = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  double rho = 0.0;
  std::size_t reps = 0;  // replicates that completed
  double reject_rate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct ExperimentResult {
  std::vector<RejectionRow> rows;
  std::size_t failed_replicates = 0;
};

/// 95% Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n);

/// Replicate r draws its data from the stream {seed, r}. Replicates run in
/// parallel; the table does not depend on the thread count. Throws
/// ReplicateFailure when more than 1% of replicates fail.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_csv(std::ostream& out, const std::vector<RejectionRow>& rows);

}  // namespace adanorm
