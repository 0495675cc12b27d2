#include "adanorm/testkit.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>

#include "adanorm/error.hpp"

namespace adanorm {

namespace {

void check_family(std::span<const NormSpec> family, std::size_t d) {
  if (family.empty()) fail(ErrorKind::EmptyInput, "norm family is empty");
  for (const auto& spec : family) spec.check_dimension(d);
}

// Collects the first exception thrown inside an OpenMP loop so it can be
// rethrown on the calling thread.
class ExceptionSlot {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
#pragma omp critical(adanorm_exception_slot)
      if (!ptr_) ptr_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (ptr_) std::rethrow_exception(ptr_);
  }

 private:
  std::exception_ptr ptr_;
};

nlohmann::json extended(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

std::string measure_name(MeasureKind kind) { return kind == MeasureKind::AcceptanceRate ? "ar" : "mf"; }

}  // namespace

AdaptiveValue adaptive_statistic(std::span<const double> u, std::span<const NormCalibration> cals,
                                 const DrawMatrix& draws, const MeasureConfig& cfg, Engine engine) {
  if (cals.empty()) fail(ErrorKind::EmptyInput, "no norm calibrations");
  if (u.size() != draws.dim())
    fail(ErrorKind::DimensionMismatch, "statistic has dimension " + std::to_string(u.size()) + ", draws have " +
                                           std::to_string(draws.dim()));
  AdaptiveValue out;
  out.per_norm.resize(cals.size());
  out.z = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cals.size(); ++k) {
    out.per_norm[k] = measure(u, cals[k], draws, cfg, engine);
    if (out.per_norm[k] < out.z || k == 0) {
      out.z = out.per_norm[k];
      out.selected = k;
    }
  }
  return out;
}

InnerCalibration calibrate_inner(DrawMatrix draws, std::span<const NormSpec> family, double alpha) {
  check_family(family, draws.dim());
  InnerCalibration inner{std::move(draws), {}};
  inner.cals.reserve(family.size());
  for (const auto& spec : family) inner.cals.push_back(critical_value(spec, inner.draws, alpha));
  return inner;
}

std::size_t threshold_rank(std::size_t m, double alpha) {
  const auto r = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(m) + 1e-9));
  return std::clamp<std::size_t>(r, 1, std::max<std::size_t>(m, 1));
}

namespace {

// Inner draws and critical values shared by calibrate_null and the p-value
// path of run_test; the outer draw m comes from the stream {base, m + 1}.
struct PreparedNull {
  CalibrationSeeds seeds;
  CholeskyFactor chol;
  InnerCalibration inner;
};

PreparedNull prepare_null(const CovMatrix& sigma_n, std::span<const NormSpec> family, const MeasureConfig& cfg,
                          SeededStream seed) {
  cfg.validate();
  check_family(family, sigma_n.dim());
  PreparedNull prep;
  prep.seeds = {seed.seed, seed.stream_index, derive_seed(seed.seed, seed.stream_index)};
  prep.chol = cholesky_factor(sigma_n);
  prep.inner = calibrate_inner(sample_mvn(prep.chol.lower, cfg.m_inner, {prep.seeds.base, 0}, sigma_n), family,
                               cfg.alpha);
  return prep;
}

template <class F>
void for_each_outer(std::size_t m_outer, bool parallel, F&& f) {
  ExceptionSlot slot;
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t m = 0; m < m_outer; ++m) slot.run([&] { f(m); });
  } else {
    for (std::size_t m = 0; m < m_outer; ++m) slot.run([&] { f(m); });
  }
  slot.rethrow();
}

std::size_t count_at_most(const PreparedNull& prep, const MeasureConfig& cfg, double z, CalibrationOptions options) {
  std::vector<char> hit(cfg.m_outer, 0);
  for_each_outer(cfg.m_outer, options.parallel, [&](std::size_t m) {
    const std::vector<double> u = sample_normal_vector(prep.chol.lower, {prep.seeds.base, m + 1});
    for (const auto& cal : prep.inner.cals)
      if (measure_at_most(u, cal, prep.inner.draws, cfg, z, options.engine)) {
        hit[m] = 1;
        break;
      }
  });
  return static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
}

}  // namespace

CalibrationResult calibrate_null(const CovMatrix& sigma_n, std::span<const NormSpec> family, const MeasureConfig& cfg,
                                 SeededStream seed, CalibrationOptions options) {
  PreparedNull prep = prepare_null(sigma_n, family, cfg, seed);
  CalibrationResult out;
  out.family.assign(family.begin(), family.end());
  out.alpha = cfg.alpha;
  out.cfg = cfg;
  out.seeds = prep.seeds;
  out.jitter = prep.chol.jitter;

  std::vector<double> null_z(cfg.m_outer);
  for_each_outer(cfg.m_outer, options.parallel, [&](std::size_t m) {
    const std::vector<double> u = sample_normal_vector(prep.chol.lower, {prep.seeds.base, m + 1});
    null_z[m] = adaptive_statistic(u, prep.inner.cals, prep.inner.draws, cfg, options.engine).z;
  });
  std::sort(null_z.begin(), null_z.end());
  out.threshold = null_z[threshold_rank(cfg.m_outer, cfg.alpha) - 1];
  out.null_z_sorted = std::move(null_z);
  out.inner = std::move(prep.inner);
  return out;
}

std::size_t count_null_at_most(const CovMatrix& sigma_n, std::span<const NormSpec> family, const MeasureConfig& cfg,
                               SeededStream seed, double z, CalibrationOptions options) {
  return count_at_most(prepare_null(sigma_n, family, cfg, seed), cfg, z, options);
}

double p_value(double z, std::span<const double> null_sorted) {
  if (null_sorted.empty()) fail(ErrorKind::EmptyInput, "empty null sample");
  const auto at_most = std::upper_bound(null_sorted.begin(), null_sorted.end(), z) - null_sorted.begin();
  return (1.0 + static_cast<double>(at_most)) / (static_cast<double>(null_sorted.size()) + 1.0);
}

double p_value(double z, const CalibrationResult& calib) { return p_value(z, calib.null_z_sorted); }

TestReport run_test(const EstimateResult& est, std::span<const NormSpec> family, const MeasureConfig& cfg,
                    SeededStream seed, TestOptions options) {
  if (est.n < 2) fail(ErrorKind::InsufficientData, "test needs n >= 2");
  if (est.dim() < 1) fail(ErrorKind::InsufficientData, "test needs d >= 1");
  if (est.sigma_n.dim() != est.dim()) fail(ErrorKind::DimensionMismatch, "sigma_n does not match psi_n");

  const PreparedNull prep = prepare_null(est.sigma_n, family, cfg, seed);

  TestReport r;
  r.n = est.n;
  r.sigma_source = est.sigma_source;
  r.u_n.resize(est.dim());
  const double root_n = std::sqrt(static_cast<double>(est.n));
  for (std::size_t j = 0; j < est.dim(); ++j) r.u_n[j] = root_n * est.psi_n[j];

  const AdaptiveValue z = adaptive_statistic(r.u_n, prep.inner.cals, prep.inner.draws, cfg, options.calibration.engine);
  r.z_n = z.z;
  r.per_norm_gamma = z.per_norm;
  r.selected_norm = z.selected;
  r.family.assign(family.begin(), family.end());
  r.family_fingerprint = family_fingerprint(family);
  const std::size_t at_most = count_at_most(prep, cfg, r.z_n, options.calibration);
  r.p_value = (1.0 + static_cast<double>(at_most)) / (static_cast<double>(cfg.m_outer) + 1.0);
  r.alpha = cfg.alpha;
  r.reject = r.p_value <= cfg.alpha;
  r.seeds = prep.seeds;
  r.cfg = cfg;
  r.calibration = "parametric-bootstrap";
  if (est.sigma_source == SigmaSource::InfluenceFunction)
    r.comparators = comparator_pvalues(est.psi_n, est.sigma_n, est.n, options.cauchy_form);
  return r;
}

TestReport permutation_test(const Matrix& w, std::span<const double> y, std::span<const NormSpec> family,
                            const MeasureConfig& cfg, std::size_t n_perm, SeededStream seed, TestOptions options) {
  cfg.validate();
  const std::size_t n = w.rows();
  const std::size_t d = w.cols();
  if (n < 3) fail(ErrorKind::InsufficientData, "permutation test needs n >= 3");
  if (y.size() != n) fail(ErrorKind::DimensionMismatch, "w and y lengths differ");
  if (n_perm < 1) fail(ErrorKind::DomainError, "permutation test needs n_perm >= 1");
  check_family(family, d);

  const std::uint64_t base = derive_seed(seed.seed, seed.stream_index);
  const SeededStream inner_stream{base, 0};
  const std::uint64_t perm_seed = derive_seed(base, 1);
  const Matrix standard = standard_normal_rows(cfg.m_inner / 2, d, inner_stream);
  const double root_n = std::sqrt(static_cast<double>(n));

  struct Evaluated {
    EstimateResult est;
    std::vector<double> u;
    AdaptiveValue z;
  };
  const auto evaluate_z = [&](std::span<const double> yy) {
    Evaluated e{correlation_estimator(w, yy), std::vector<double>(d), {}};
    const CholeskyFactor chol = cholesky_factor(e.est.sigma_n);
    const InnerCalibration inner =
        calibrate_inner(draws_from_standard(chol.lower, standard, inner_stream, e.est.sigma_n), family, cfg.alpha);
    for (std::size_t j = 0; j < d; ++j) e.u[j] = root_n * e.est.psi_n[j];
    e.z = adaptive_statistic(e.u, inner.cals, inner.draws, cfg, options.calibration.engine);
    return e;
  };

  const Evaluated original = evaluate_z(y);

  std::vector<double> perm_z(n_perm);
  ExceptionSlot slot;
  const auto one = [&](std::size_t b) {
    slot.run([&] {
      std::vector<double> yy(y.begin(), y.end());
      Xoshiro256pp gen(SeededStream{perm_seed, b});
      for (std::size_t i = n - 1; i > 0; --i) std::swap(yy[i], yy[gen.bounded(i + 1)]);
      perm_z[b] = evaluate_z(yy).z.z;
    });
  };
  if (options.calibration.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t b = 0; b < n_perm; ++b) one(b);
  } else {
    for (std::size_t b = 0; b < n_perm; ++b) one(b);
  }
  slot.rethrow();
  std::sort(perm_z.begin(), perm_z.end());

  TestReport r;
  r.n = n;
  r.u_n = original.u;
  r.z_n = original.z.z;
  r.per_norm_gamma = original.z.per_norm;
  r.selected_norm = original.z.selected;
  r.family.assign(family.begin(), family.end());
  r.family_fingerprint = family_fingerprint(family);
  r.p_value = p_value(r.z_n, perm_z);
  r.alpha = cfg.alpha;
  r.reject = r.p_value <= cfg.alpha;
  r.seeds = {seed.seed, seed.stream_index, base};
  r.cfg = cfg;
  r.calibration = "permutation";
  r.n_perm = n_perm;
  r.comparators = comparator_pvalues(original.est.psi_n, original.est.sigma_n, n, options.cauchy_form);
  return r;
}

nlohmann::json to_json(const TestReport& report) {
  using nlohmann::json;
  json per_norm = json::array();
  for (std::size_t k = 0; k < report.family.size(); ++k)
    per_norm.push_back({{"norm", report.family[k].name()}, {"gamma", extended(report.per_norm_gamma[k])}});
  json family = json::array();
  for (const auto& spec : report.family) family.push_back(spec.name());

  json comparators = nullptr;
  if (report.comparators) {
    const auto& c = *report.comparators;
    comparators = {{"bonferroni_p", c.bonferroni_p},
                   {"cauchy_p", c.cauchy_p ? json(*c.cauchy_p) : json(nullptr)},
                   {"cauchy_statistic", c.cauchy_statistic ? json(*c.cauchy_statistic) : json(nullptr)},
                   {"cauchy_form", c.cauchy_form == CauchyForm::Paper ? "paper" : "canonical"}};
  }

  json j;
  j["u_n"] = report.u_n;
  j["z_n"] = extended(report.z_n);
  j["per_norm"] = std::move(per_norm);
  j["selected_norm"] = report.selected_norm;
  j["p_value"] = report.p_value;
  j["reject"] = report.reject;
  j["alpha"] = report.alpha;
  j["comparators"] = std::move(comparators);
  j["seeds"] = {{"seed", report.seeds.seed},
                {"stream_index", report.seeds.stream_index},
                {"calibration_base", report.seeds.base}};
  j["family"] = std::move(family);
  j["family_fingerprint"] = report.family_fingerprint;
  j["measure"] = measure_name(report.cfg.kind);
  j["tau"] = report.cfg.tau;
  j["m_inner"] = report.cfg.m_inner;
  j["m_outer"] = report.cfg.m_outer;
  j["n"] = report.n;
  j["sigma_source"] = report.sigma_source == SigmaSource::Bootstrap ? "bootstrap" : "influence-function";
  j["calibration"] = report.calibration;
  if (report.calibration == "permutation") j["n_perm"] = report.n_perm;
  return j;
}

}  // namespace adanorm
