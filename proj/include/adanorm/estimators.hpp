#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "adanorm/linalg.hpp"
#include "adanorm/rng.hpp"

namespace adanorm {

enum class SigmaSource { InfluenceFunction, Bootstrap };

/// An asymptotically linear estimate psi_n with its covariance estimate.
struct EstimateResult {
  std::vector<double> psi_n;
  std::size_t n = 0;
  std::optional<Matrix> if_matrix;  // n x d, columns centered
  CovMatrix sigma_n;
  SigmaSource sigma_source = SigmaSource::InfluenceFunction;

  std::size_t dim() const noexcept { return psi_n.size(); }
};

/// Subtracts each column's mean in place.
void center_columns(Matrix& m);

/// Sigma_jk = (1/n) sum_i phi_j(X_i) phi_k(X_i) after column centering.
CovMatrix empirical_covariance_from_if(const Matrix& if_matrix);

// --- Example 1: marginal correlations --------------------------------------

/// psi_j = corr(W_j, Y) with the classical correlation influence function
/// z_w z_y - (rho_j / 2)(z_w^2 + z_y^2) on standardized coordinates.
/// Throws InsufficientData (n < 3), DegenerateOutcome / DegenerateCovariate
/// on zero variance.
EstimateResult correlation_estimator(const Matrix& w, std::span<const double> y);

// --- Bootstrap ---------------------------------------------------------------

/// Estimator evaluated on a resample, given as row indices into the data.
using ResampleEstimator = std::function<std::vector<double>(std::span<const std::size_t> rows)>;

/// n times the sample covariance of psi* over b_reps nonparametric resamples.
/// A resample whose estimator throws adanorm::Error is redrawn; after
/// 10 * b_reps attempts in total the last error propagates.
CovMatrix bootstrap_covariance(const ResampleEstimator& estimator, std::size_t n, std::size_t b_reps,
                               SeededStream seed);

// --- Example 2: log-linear coefficients with outcomes missing at random -----

/// Fits E[y | x] on the rows of x and predicts at the rows of `at`.
class RegressionLearner {
 public:
  virtual ~RegressionLearner() = default;
  virtual std::vector<double> fit_predict(const Matrix& x, std::span<const double> y, const Matrix& at) const = 0;
};

/// Logistic regression with intercept, Newton-Raphson with step halving.
class LogisticRegressionLearner final : public RegressionLearner {
 public:
  std::vector<double> fit_predict(const Matrix& x, std::span<const double> y, const Matrix& at) const override;

  /// Coefficients (intercept first). Throws Separation on divergence.
  static std::vector<double> fit(const Matrix& x, std::span<const double> y, std::span<const double> weights = {});
};

/// Univariate local-linear smoother, Gaussian kernel, bandwidth
/// 1.06 * sd(x) * n^(-1/5).
class LocalLinearSmoother final : public RegressionLearner {
 public:
  std::vector<double> fit_predict(const Matrix& x, std::span<const double> y, const Matrix& at) const override;
};

struct LoglinearLearners {
  const RegressionLearner* inner = nullptr;  // P(U = 1 | Delta = 1, W); logistic regression when null
  const RegressionLearner* outer = nullptr;  // E[mu(W) | W_j]; local-linear smoother when null
};

/// Plug-in psi_j = cov(W_j, log m_j(W_j)) / var(W_j) with
/// m_j(w_j) = E[mu(W) | W_j = w_j] clipped to [1e-6, 1].
std::vector<double> loglinear_missing_psi(const Matrix& w, std::span<const double> u, std::span<const double> delta,
                                          LoglinearLearners learners = {});

struct BootstrapOptions {
  std::size_t b_reps = 400;
  SeededStream seed{0x5EED, 0};
};

/// loglinear_missing_psi with Sigma_n from bootstrap_covariance.
EstimateResult loglinear_missing_estimator(const Matrix& w, std::span<const double> u, std::span<const double> delta,
                                           LoglinearLearners learners = {}, BootstrapOptions boot = {});

// --- Two-phase sampling: weighted logistic slope -----------------------------

/// One observed unit (W, S~, Delta, Y); s_tilde is present iff delta == 1.
struct TwoPhaseRecord {
  std::vector<double> w;        // finite-support stratum covariates
  std::vector<double> s_tilde;  // biomarkers, empty when delta == 0
  int delta = 0;
  int y = 0;
};

struct TwoPhaseFit {
  std::array<double, 2> beta{};     // intercept, slope
  std::vector<double> if_values;    // influence function of the slope, one per record
  std::vector<double> second_term;  // the (1 - Delta/pi) xi(w, y) summand alone
};

/// Delta/pi weighted logistic regression of Y on biomarker j, pi estimated as
/// the within-(W, Y) stratum mean of Delta. Throws EmptyStratum when a stratum
/// has no phase-two record, Separation when Newton diverges (|beta| > 50).
TwoPhaseFit two_phase_logistic_estimator(std::span<const TwoPhaseRecord> records, std::size_t j);

/// Slopes for every biomarker, IF matrix and cross-moment Sigma_n.
EstimateResult two_phase_estimate(std::span<const TwoPhaseRecord> records);

}  // namespace adanorm
