#include "adanorm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "adanorm/error.hpp"

namespace adanorm {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population (1/n) variance, two-pass.
double variance_of(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

double expit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(m.row(rows[i]).begin(), m.cols(), out.row(i).begin());
  return out;
}

std::vector<double> select(std::span<const double> v, std::span<const std::size_t> rows) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

}  // namespace

void center_columns(Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 0) return;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += m(i, j);
    const double mean = s / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) m(i, j) -= mean;
  }
}

CovMatrix empirical_covariance_from_if(const Matrix& if_matrix) {
  const std::size_t n = if_matrix.rows();
  const std::size_t d = if_matrix.cols();
  if (n < 2) fail(ErrorKind::InsufficientData, "covariance needs n >= 2");
  Matrix centered = if_matrix;
  center_columns(centered);
  Matrix sigma(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = centered.row(i);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = j; k < d; ++k) sigma(j, k) += r[j] * r[k];
  }
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j; k < d; ++k) {
      sigma(j, k) /= static_cast<double>(n);
      sigma(k, j) = sigma(j, k);
    }
  return CovMatrix(std::move(sigma));
}

// ---------------------------------------------------------------------------

EstimateResult correlation_estimator(const Matrix& w, std::span<const double> y) {
  const std::size_t n = w.rows();
  const std::size_t d = w.cols();
  if (y.size() != n) fail(ErrorKind::DimensionMismatch, "w has " + std::to_string(n) + " rows, y has " + std::to_string(y.size()));
  if (n < 3) fail(ErrorKind::InsufficientData, "correlation needs n >= 3");
  if (d < 1) fail(ErrorKind::InsufficientData, "correlation needs at least one covariate");

  const double my = mean_of(y);
  const double vy = variance_of(y, my);
  if (!(vy > 0.0)) fail(ErrorKind::DegenerateOutcome, "outcome has zero variance");
  const double sy = std::sqrt(vy);
  std::vector<double> zy(n);
  for (std::size_t i = 0; i < n; ++i) zy[i] = (y[i] - my) / sy;

  EstimateResult out;
  out.n = n;
  out.psi_n.resize(d);
  Matrix phi(n, d);
  std::vector<double> col(n), zw(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = w(i, j);
    const double mw = mean_of(col);
    const double vw = variance_of(col, mw);
    if (!(vw > 0.0)) fail(ErrorKind::DegenerateCovariate, "covariate " + std::to_string(j + 1) + " has zero variance");
    const double sw = std::sqrt(vw);
    double rho = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      zw[i] = (col[i] - mw) / sw;
      rho += zw[i] * zy[i];
    }
    rho /= static_cast<double>(n);
    out.psi_n[j] = rho;
    for (std::size_t i = 0; i < n; ++i) phi(i, j) = zw[i] * zy[i] - 0.5 * rho * (zw[i] * zw[i] + zy[i] * zy[i]);
  }
  center_columns(phi);
  out.sigma_n = empirical_covariance_from_if(phi);
  out.if_matrix = std::move(phi);
  out.sigma_source = SigmaSource::InfluenceFunction;
  return out;
}

// ---------------------------------------------------------------------------

CovMatrix bootstrap_covariance(const ResampleEstimator& estimator, std::size_t n, std::size_t b_reps,
                               SeededStream seed) {
  if (b_reps < 50) fail(ErrorKind::DomainError, "bootstrap needs b_reps >= 50");
  if (n < 2) fail(ErrorKind::InsufficientData, "bootstrap needs n >= 2");

  const std::uint64_t base = derive_seed(seed.seed, seed.stream_index);
  std::vector<std::vector<double>> reps;
  reps.reserve(b_reps);
  std::vector<std::size_t> rows(n);
  std::size_t attempts = 0;
  for (std::size_t b = 0; b < b_reps; ++b) {
    for (std::size_t retry = 0;; ++retry) {
      ++attempts;
      Xoshiro256pp gen(SeededStream{base, b + retry * b_reps});
      for (auto& r : rows) r = static_cast<std::size_t>(gen.bounded(n));
      try {
        reps.push_back(estimator(rows));
        break;
      } catch (const Error&) {
        if (attempts >= 10 * b_reps) throw;
      }
    }
  }

  const std::size_t d = reps.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : reps) {
    if (r.size() != d) fail(ErrorKind::DimensionMismatch, "bootstrap estimator changed dimension");
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(b_reps);
  Matrix sigma(d, d);
  for (const auto& r : reps)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = j; k < d; ++k) sigma(j, k) += (r[j] - mean[j]) * (r[k] - mean[k]);
  const double scale = static_cast<double>(n) / static_cast<double>(b_reps - 1);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j; k < d; ++k) {
      sigma(j, k) *= scale;
      sigma(k, j) = sigma(j, k);
    }
  return CovMatrix(std::move(sigma));
}

// ---------------------------------------------------------------------------

std::vector<double> LogisticRegressionLearner::fit(const Matrix& x, std::span<const double> y,
                                                   std::span<const double> weights) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols() + 1;
  if (y.size() != n) fail(ErrorKind::DimensionMismatch, "logistic regression: x and y lengths differ");
  if (!weights.empty() && weights.size() != n) fail(ErrorKind::DimensionMismatch, "logistic regression weights");
  if (n < p) fail(ErrorKind::InsufficientData, "logistic regression needs more rows than coefficients");

  auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  std::vector<double> beta(p, 0.0);
  std::vector<double> eta(n);
  auto loglik = [&](const std::vector<double>& b) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double e = b[0];
      for (std::size_t c = 1; c < p; ++c) e += b[c] * x(i, c - 1);
      eta[i] = e;
      // log expit(e) and log(1 - expit(e)) without overflow
      const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      ll += weight(i) * (y[i] * e - log1pexp);
    }
    return ll;
  };

  double current = loglik(beta);
  std::vector<double> grad(p);
  Matrix info(p, p), lower;
  for (int iter = 0; iter < 100; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    info = Matrix(p, p);
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = expit(eta[i]);
      const double wi = weight(i);
      const double r = wi * (y[i] - mu);
      const double v = wi * mu * (1.0 - mu);
      for (std::size_t a = 0; a < p; ++a) {
        const double xa = a == 0 ? 1.0 : x(i, a - 1);
        grad[a] += r * xa;
        for (std::size_t b = 0; b <= a; ++b) info(a, b) += v * xa * (b == 0 ? 1.0 : x(i, b - 1));
      }
    }
    double gnorm = 0.0;
    for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
    if (gnorm <= 1e-10 * static_cast<double>(n)) return beta;
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b) info(a, b) = info(b, a);
    if (!cholesky_plain(info, lower)) fail(ErrorKind::Separation, "logistic information matrix is singular");
    const std::vector<double> step = cholesky_solve(lower, grad);

    double scale = 1.0;
    std::vector<double> trial(p);
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      for (std::size_t a = 0; a < p; ++a) trial[a] = beta[a] + scale * step[a];
      const double ll = loglik(trial);
      if (ll >= current - 1e-12 * std::abs(current)) {
        beta = trial;
        current = ll;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) loglik(beta);
    double bnorm = 0.0;
    for (double b : beta) bnorm += b * b;
    if (std::sqrt(bnorm) > 50.0) fail(ErrorKind::Separation, "logistic coefficients diverge");
    if (!improved) break;
  }
  fail(ErrorKind::Separation, "logistic Newton iterations did not converge");
}

std::vector<double> LogisticRegressionLearner::fit_predict(const Matrix& x, std::span<const double> y,
                                                           const Matrix& at) const {
  const std::vector<double> beta = fit(x, y);
  std::vector<double> out(at.rows());
  for (std::size_t i = 0; i < at.rows(); ++i) {
    double e = beta[0];
    for (std::size_t c = 0; c < at.cols(); ++c) e += beta[c + 1] * at(i, c);
    out[i] = expit(e);
  }
  return out;
}

std::vector<double> LocalLinearSmoother::fit_predict(const Matrix& x, std::span<const double> y,
                                                     const Matrix& at) const {
  if (x.cols() != 1 || at.cols() != 1) fail(ErrorKind::DimensionMismatch, "local-linear smoother is univariate");
  const std::size_t n = x.rows();
  if (y.size() != n) fail(ErrorKind::DimensionMismatch, "smoother x and y lengths differ");
  const std::vector<double> xs = x.column(0);
  const double mx = mean_of(xs);
  const double sd = std::sqrt(variance_of(xs, mx) * static_cast<double>(n) / static_cast<double>(n - 1));
  if (!(sd > 0.0)) fail(ErrorKind::DegenerateCovariate, "smoother covariate has zero variance");
  const double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);

  // Predicting at the design points themselves is the common case; the kernel
  // is then symmetric (x_i - x_q is exactly -(x_q - x_i)) and each weight is
  // computed once.
  const std::vector<double> targets = at.column(0);
  std::vector<double> weights;
  if (n <= 2048 && targets == xs) {
    weights.resize(n * n);
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t i = q; i < n; ++i) {
        const double u = (xs[i] - xs[q]) / h;
        weights[q * n + i] = weights[i * n + q] = std::exp(-0.5 * u * u);
      }
  }

  std::vector<double> out(at.rows());
  for (std::size_t q = 0; q < at.rows(); ++q) {
    const double x0 = targets[q];
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = xs[i] - x0;
      double k;
      if (weights.empty()) {
        const double u = dx / h;
        k = std::exp(-0.5 * u * u);
      } else {
        k = weights[q * n + i];
      }
      s0 += k;
      s1 += k * dx;
      s2 += k * dx * dx;
      t0 += k * y[i];
      t1 += k * dx * y[i];
    }
    const double det = s0 * s2 - s1 * s1;
    double fit;
    if (det > 1e-12 * s0 * s2 && det > 0.0)
      fit = (s2 * t0 - s1 * t1) / det;
    else if (s0 > 0.0)
      fit = t0 / s0;  // Nadaraya-Watson when the local design is degenerate
    else
      fit = std::numeric_limits<double>::quiet_NaN();
    out[q] = fit;
  }
  return out;
}

std::vector<double> loglinear_missing_psi(const Matrix& w, std::span<const double> u, std::span<const double> delta,
                                          LoglinearLearners learners) {
  const std::size_t n = w.rows();
  const std::size_t d = w.cols();
  if (u.size() != n || delta.size() != n) fail(ErrorKind::DimensionMismatch, "w, u and delta lengths differ");
  if (n < 3) fail(ErrorKind::InsufficientData, "log-linear estimator needs n >= 3");

  const LogisticRegressionLearner default_inner;
  const LocalLinearSmoother default_outer;
  const RegressionLearner& inner = learners.inner ? *learners.inner : default_inner;
  const RegressionLearner& outer = learners.outer ? *learners.outer : default_outer;

  std::vector<std::size_t> observed;
  for (std::size_t i = 0; i < n; ++i)
    if (delta[i] == 1.0) observed.push_back(i);
  if (observed.empty()) fail(ErrorKind::InsufficientData, "no observed outcomes (all delta = 0)");
  const std::vector<double> u_obs = select(u, observed);
  if (std::all_of(u_obs.begin(), u_obs.end(), [&](double v) { return v == u_obs.front(); }))
    fail(ErrorKind::DegenerateOutcome, "observed outcomes are constant");

  const std::vector<double> mu = inner.fit_predict(select_rows(w, observed), u_obs, w);

  std::vector<double> psi(d);
  Matrix wj(n, 1);
  std::vector<double> log_m(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) wj(i, 0) = w(i, j);
    const std::vector<double> mhat = outer.fit_predict(wj, mu, wj);
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(mhat[i])) fail(ErrorKind::NonPositiveSmoother, "outer smoother undefined for covariate " + std::to_string(j + 1));
      log_m[i] = std::log(std::clamp(mhat[i], 1e-6, 1.0));
    }
    const std::vector<double> col = wj.column(0);
    const double mw = mean_of(col);
    const double vw = variance_of(col, mw);
    if (!(vw > 0.0)) fail(ErrorKind::DegenerateCovariate, "covariate " + std::to_string(j + 1) + " has zero variance");
    const double ml = mean_of(log_m);
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) cov += (col[i] - mw) * (log_m[i] - ml);
    psi[j] = cov / static_cast<double>(n) / vw;
  }
  return psi;
}

EstimateResult loglinear_missing_estimator(const Matrix& w, std::span<const double> u, std::span<const double> delta,
                                           LoglinearLearners learners, BootstrapOptions boot) {
  EstimateResult out;
  out.psi_n = loglinear_missing_psi(w, u, delta, learners);
  out.n = w.rows();
  const ResampleEstimator resample = [&](std::span<const std::size_t> rows) {
    return loglinear_missing_psi(select_rows(w, rows), select(u, rows), select(delta, rows), learners);
  };
  out.sigma_n = bootstrap_covariance(resample, out.n, boot.b_reps, boot.seed);
  out.sigma_source = SigmaSource::Bootstrap;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Strata {
  std::vector<std::size_t> of_record;  // stratum index per record
  std::vector<double> pi;              // mean Delta per stratum
  std::size_t count = 0;
};

Strata build_strata(std::span<const TwoPhaseRecord> records) {
  std::map<std::pair<std::vector<double>, int>, std::size_t> index;
  Strata s;
  s.of_record.resize(records.size());
  std::vector<double> n_h, obs_h;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.delta != 0 && r.delta != 1) fail(ErrorKind::DomainError, "delta must be 0 or 1");
    if (r.y != 0 && r.y != 1) fail(ErrorKind::DomainError, "y must be 0 or 1");
    auto [it, inserted] = index.try_emplace({r.w, r.y}, n_h.size());
    if (inserted) {
      n_h.push_back(0.0);
      obs_h.push_back(0.0);
    }
    s.of_record[i] = it->second;
    n_h[it->second] += 1.0;
    obs_h[it->second] += r.delta;
  }
  s.count = n_h.size();
  s.pi.resize(s.count);
  for (std::size_t h = 0; h < s.count; ++h) {
    if (obs_h[h] == 0.0) fail(ErrorKind::EmptyStratum, "a (w, y) stratum has no phase-two records");
    s.pi[h] = obs_h[h] / n_h[h];
  }
  return s;
}

TwoPhaseFit fit_slope(std::span<const TwoPhaseRecord> records, const Strata& strata, std::size_t j) {
  const std::size_t n = records.size();
  std::vector<std::size_t> obs;
  for (std::size_t i = 0; i < n; ++i)
    if (records[i].delta == 1) {
      if (records[i].s_tilde.size() <= j) fail(ErrorKind::DimensionMismatch, "biomarker index out of range");
      obs.push_back(i);
    }
  Matrix s(obs.size(), 1);
  std::vector<double> y(obs.size()), weights(obs.size());
  for (std::size_t r = 0; r < obs.size(); ++r) {
    const auto& rec = records[obs[r]];
    s(r, 0) = rec.s_tilde[j];
    y[r] = rec.y;
    weights[r] = 1.0 / strata.pi[strata.of_record[obs[r]]];
  }
  const std::vector<double> beta = LogisticRegressionLearner::fit(s, y, weights);

  TwoPhaseFit out;
  out.beta = {beta[0], beta[1]};

  // M = -(1/n) sum Delta/pi m(1-m) [1 s; s s^2]
  double m00 = 0.0, m01 = 0.0, m11 = 0.0;
  for (std::size_t r = 0; r < obs.size(); ++r) {
    const double sv = s(r, 0);
    const double m = expit(beta[0] + beta[1] * sv);
    const double v = weights[r] * m * (1.0 - m);
    m00 -= v;
    m01 -= v * sv;
    m11 -= v * sv * sv;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  m00 *= inv_n;
  m01 *= inv_n;
  m11 *= inv_n;
  const double det = m00 * m11 - m01 * m01;
  if (!(std::abs(det) > 0.0)) fail(ErrorKind::Separation, "weighted information matrix is singular");
  // -M^{-1} = -(1/det) [m11 -m01; -m01 m00]; row 2 gives (a, b).
  const double a = m01 / det;
  const double b = -m00 / det;

  std::vector<double> score(n, 0.0);
  std::vector<double> xi_sum(strata.count, 0.0), xi_cnt(strata.count, 0.0);
  for (std::size_t r = 0; r < obs.size(); ++r) {
    const std::size_t i = obs[r];
    const double sv = s(r, 0);
    const double m = expit(beta[0] + beta[1] * sv);
    score[i] = (a + b * sv) * (y[r] - m);
    xi_sum[strata.of_record[i]] += score[i];
    xi_cnt[strata.of_record[i]] += 1.0;
  }
  out.if_values.resize(n);
  out.second_term.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = strata.of_record[i];
    const double ratio = records[i].delta / strata.pi[h];
    out.second_term[i] = (1.0 - ratio) * (xi_sum[h] / xi_cnt[h]);
    out.if_values[i] = ratio * score[i] + out.second_term[i];
  }
  return out;
}

}  // namespace

TwoPhaseFit two_phase_logistic_estimator(std::span<const TwoPhaseRecord> records, std::size_t j) {
  if (records.size() < 2) fail(ErrorKind::InsufficientData, "two-phase estimator needs n >= 2");
  return fit_slope(records, build_strata(records), j);
}

EstimateResult two_phase_estimate(std::span<const TwoPhaseRecord> records) {
  if (records.size() < 2) fail(ErrorKind::InsufficientData, "two-phase estimator needs n >= 2");
  const Strata strata = build_strata(records);
  std::size_t d = 0;
  for (const auto& r : records)
    if (r.delta == 1) {
      d = r.s_tilde.size();
      break;
    }
  if (d == 0) fail(ErrorKind::InsufficientData, "no biomarkers observed");

  EstimateResult out;
  out.n = records.size();
  out.psi_n.resize(d);
  Matrix phi(records.size(), d);
  for (std::size_t j = 0; j < d; ++j) {
    const TwoPhaseFit fit = fit_slope(records, strata, j);
    out.psi_n[j] = fit.beta[1];
    for (std::size_t i = 0; i < records.size(); ++i) phi(i, j) = fit.if_values[i];
  }
  center_columns(phi);
  out.sigma_n = empirical_covariance_from_if(phi);
  out.if_matrix = std::move(phi);
  out.sigma_source = SigmaSource::InfluenceFunction;
  return out;
}

}  // namespace adanorm
