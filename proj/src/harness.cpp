#include "adanorm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <string>

#include "adanorm/error.hpp"
#include "adanorm/estimators.hpp"
#include "adanorm/gauss.hpp"
#include "adanorm/norms.hpp"
#include "adanorm/testkit.hpp"

namespace adanorm {

namespace {

double expit(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

void check_setting(int example, int setting, std::size_t d) {
  const int max_setting = example == 1 ? 3 : 4;
  if (setting < 1 || setting > max_setting)
    fail(ErrorKind::InvalidSetting, "example " + std::to_string(example) + " has no setting " + std::to_string(setting));
  if (setting >= 3 && d < 10)
    fail(ErrorKind::InvalidSetting, "setting " + std::to_string(setting) + " needs d >= 10");
}

// W_i = sqrt(rho) Z0 1 + sqrt(1 - rho) Z, row by row from one generator.
void fill_equicorrelated(Matrix& w, double rho, Xoshiro256pp& gen, std::vector<double>& scratch) {
  const double a = std::sqrt(rho);
  const double b = std::sqrt(1.0 - rho);
  scratch.resize(w.cols() + 1);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    standard_normals(gen, scratch);
    for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = a * scratch[0] + b * scratch[j + 1];
  }
}

}  // namespace

std::vector<double> example1_coefficients(int setting, std::size_t d) {
  check_setting(1, setting, d);
  std::vector<double> beta(d, 0.0);
  if (setting == 2) beta[0] = 0.25;
  if (setting == 3)
    for (std::size_t j = 0; j < 10; ++j) beta[j] = j < 5 ? 0.15 : -0.1;
  return beta;
}

std::vector<double> example2_coefficients(int setting, std::size_t d) {
  check_setting(2, setting, d);
  std::vector<double> beta(d, 0.0);
  if (setting == 2) beta[0] = 0.6;
  if (setting == 3)
    for (std::size_t j = 0; j < 10; ++j) beta[j] = j < 5 ? 0.32 : -0.32;
  if (setting == 4)
    for (std::size_t j = 0; j < 10; ++j) beta[j] = j < 5 ? 0.23375 : 0.4675;
  return beta;
}

Example1Data generate_example1_linear(std::size_t n, double rho, const std::vector<double>& beta, SeededStream stream) {
  if (!(rho >= 0.0 && rho < 1.0)) fail(ErrorKind::DomainError, "rho must lie in [0, 1)");
  const std::size_t d = beta.size();
  if (d < 1) fail(ErrorKind::DomainError, "d must be >= 1");
  Example1Data out{Matrix(n, d), std::vector<double>(n)};
  Xoshiro256pp gen(stream);
  std::vector<double> scratch;
  fill_equicorrelated(out.w, rho, gen, scratch);
  std::vector<double> eps(n);
  standard_normals(gen, eps);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += beta[j] * out.w(i, j);
    out.y[i] = mean + eps[i];
  }
  return out;
}

Example1Data generate_example1(std::size_t n, std::size_t d, double rho, int setting, SeededStream stream) {
  return generate_example1_linear(n, rho, example1_coefficients(setting, d), stream);
}

Example2Data generate_example2(std::size_t n, std::size_t d, int setting, SeededStream stream) {
  if (d < 2) fail(ErrorKind::InvalidSetting, "example 2 needs d >= 2");
  const std::vector<double> beta = example2_coefficients(setting, d);
  Example2Data out{Matrix(n, d), std::vector<double>(n), std::vector<double>(n)};
  Xoshiro256pp gen(stream);
  std::vector<double> scratch;
  fill_equicorrelated(out.w, 0.5, gen, scratch);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < d; ++j) eta += beta[j] * out.w(i, j);
    const double y = gen.uniform_open() < expit(eta) ? 1.0 : 0.0;
    const double p_obs = expit(0.5 + 0.15 * out.w(i, d - 2) - 0.275 * out.w(i, d - 1));
    out.delta[i] = gen.uniform_open() < p_obs ? 1.0 : 0.0;
    out.u[i] = out.delta[i] * y;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::AdaptiveLp: return "adaptive-lp";
    case TestKind::AdaptiveSsq: return "adaptive-ssq";
    case TestKind::L2: return "l2";
    case TestKind::LInf: return "linf";
    case TestKind::Bonferroni: return "bonferroni";
    case TestKind::Cauchy: return "cauchy";
    case TestKind::Permutation: return "permutation";
  }
  return "unknown";
}

TestKind parse_test_kind(const std::string& text) {
  for (TestKind k : {TestKind::AdaptiveLp, TestKind::AdaptiveSsq, TestKind::L2, TestKind::LInf, TestKind::Bonferroni,
                     TestKind::Cauchy, TestKind::Permutation})
    if (to_string(k) == text) return k;
  fail(ErrorKind::DomainError, "unknown test '" + text + "'");
}

void ExperimentConfig::validate() const {
  if (example != 1 && example != 2) fail(ErrorKind::InvalidSetting, "example must be 1 or 2");
  check_setting(example, setting, d);
  if (example == 2 && d < 2) fail(ErrorKind::InvalidSetting, "example 2 needs d >= 2");
  if (n < 3) fail(ErrorKind::DomainError, "n must be >= 3");
  if (!(rho >= 0.0 && rho < 1.0)) fail(ErrorKind::DomainError, "rho must lie in [0, 1)");
  if (tests.empty()) fail(ErrorKind::DomainError, "no tests requested");
  if (example == 2 && std::find(tests.begin(), tests.end(), TestKind::Permutation) != tests.end())
    fail(ErrorKind::InvalidSetting, "the permutation test applies to example 1 only");
  if (!std::isfinite(signal_scale)) fail(ErrorKind::DomainError, "signal_scale must be finite");
  measure.validate();
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.example = j.value("example", c.example);
  c.setting = j.value("setting", c.setting);
  c.n = j.value("n", c.n);
  c.d = j.value("d", c.d);
  c.rho = j.value("rho", c.rho);
  c.reps = j.value("reps", c.reps);
  c.seed = j.value("seed", c.seed);
  c.signal_scale = j.value("signal_scale", c.signal_scale);
  c.n_perm = j.value("n_perm", c.n_perm);
  c.b_reps = j.value("b_reps", c.b_reps);
  if (j.contains("cauchy_form"))
    c.cauchy_form = j.at("cauchy_form").get<std::string>() == "canonical" ? CauchyForm::Canonical : CauchyForm::Paper;
  if (j.contains("tests")) {
    c.tests.clear();
    for (const auto& t : j.at("tests")) c.tests.push_back(parse_test_kind(t.get<std::string>()));
  }
  if (j.contains("measure")) {
    const auto& m = j.at("measure");
    if (m.contains("kind")) {
      const std::string kind = m.at("kind").get<std::string>();
      if (kind != "ar" && kind != "mf") fail(ErrorKind::DomainError, "measure kind must be ar or mf");
      c.measure.kind = kind == "ar" ? MeasureKind::AcceptanceRate : MeasureKind::MultiplicativeFactor;
    }
    c.measure.alpha = m.value("alpha", c.measure.alpha);
    c.measure.tau = m.value("tau", c.measure.tau);
    c.measure.m_inner = m.value("m_inner", c.measure.m_inner);
    c.measure.m_outer = m.value("m_outer", c.measure.m_outer);
  }
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json tests_json = nlohmann::json::array();
  for (TestKind t : tests) tests_json.push_back(to_string(t));
  return {{"example", example},
          {"setting", setting},
          {"n", n},
          {"d", d},
          {"rho", rho},
          {"reps", reps},
          {"tests", tests_json},
          {"measure",
           {{"kind", measure.kind == MeasureKind::AcceptanceRate ? "ar" : "mf"},
            {"alpha", measure.alpha},
            {"tau", measure.tau},
            {"m_inner", measure.m_inner},
            {"m_outer", measure.m_outer}}},
          {"seed", seed},
          {"signal_scale", signal_scale},
          {"n_perm", n_perm},
          {"b_reps", b_reps},
          {"cauchy_form", cauchy_form == CauchyForm::Paper ? "paper" : "canonical"}};
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n) {
  if (n == 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

std::vector<NormSpec> family_for(TestKind kind, std::size_t d) {
  switch (kind) {
    case TestKind::AdaptiveLp:
    case TestKind::Permutation: return default_family(FamilyKind::Lp, d);
    case TestKind::AdaptiveSsq: return default_family(FamilyKind::SumSquares, d);
    case TestKind::L2: return {NormSpec::lp(2.0)};
    case TestKind::LInf: return {NormSpec::linf()};
    default: return {};
  }
}

// Reject flags of every requested test on one replicate.
std::vector<char> run_replicate(const ExperimentConfig& cfg, std::size_t r) {
  const std::uint64_t rep_seed = derive_seed(cfg.seed, r);
  const SeededStream data_stream{cfg.seed, r};
  const SeededStream boot_stream{rep_seed, 1};
  const SeededStream calib_stream{rep_seed, 2};
  const SeededStream perm_stream{rep_seed, 3};

  TestOptions options;
  options.cauchy_form = cfg.cauchy_form;
  options.calibration.parallel = false;

  EstimateResult est;
  Example1Data ex1;
  if (cfg.example == 1) {
    std::vector<double> beta = example1_coefficients(cfg.setting, cfg.d);
    for (double& b : beta) b *= cfg.signal_scale;
    ex1 = generate_example1_linear(cfg.n, cfg.rho, beta, data_stream);
    est = correlation_estimator(ex1.w, ex1.y);
  } else {
    const Example2Data ex2 = generate_example2(cfg.n, cfg.d, cfg.setting, data_stream);
    est = loglinear_missing_estimator(ex2.w, ex2.u, ex2.delta, {}, {cfg.b_reps, boot_stream});
  }

  std::vector<char> flags;
  flags.reserve(cfg.tests.size());
  std::optional<WaldSummary> wald;
  for (TestKind kind : cfg.tests) {
    bool reject = false;
    switch (kind) {
      case TestKind::Bonferroni:
      case TestKind::Cauchy: {
        if (!wald) wald = wald_pvalues(est.psi_n, est.sigma_n, est.n);
        if (kind == TestKind::Bonferroni) {
          reject = bonferroni_p(wald->p_values) <= cfg.measure.alpha;
        } else {
          try {
            reject = cauchy_combination(wald->p_values, cfg.cauchy_form).p <= cfg.measure.alpha;
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::PoleInput) throw;
            reject = false;
          }
        }
        break;
      }
      case TestKind::Permutation:
        reject = permutation_test(ex1.w, ex1.y, family_for(kind, cfg.d), cfg.measure, cfg.n_perm, perm_stream, options)
                     .reject;
        break;
      default:
        reject = run_test(est, family_for(kind, cfg.d), cfg.measure, calib_stream, options).reject;
    }
    flags.push_back(reject ? 1 : 0);
  }
  return flags;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t reps = cfg.reps;
  std::vector<std::vector<char>> flags(reps);
  std::vector<char> failed(reps, 0);
  std::exception_ptr fatal;

#pragma omp parallel for schedule(dynamic)
  for (std::size_t r = 0; r < reps; ++r) {
    try {
      flags[r] = run_replicate(cfg, r);
    } catch (const Error&) {
      failed[r] = 1;
    } catch (...) {
#pragma omp critical(adanorm_experiment_fatal)
      if (!fatal) fatal = std::current_exception();
    }
  }
  if (fatal) std::rethrow_exception(fatal);

  ExperimentResult out;
  out.failed_replicates = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  if (static_cast<double>(out.failed_replicates) > 0.01 * static_cast<double>(reps))
    fail(ErrorKind::ReplicateFailure, std::to_string(out.failed_replicates) + " of " + std::to_string(reps) +
                                          " replicates failed");
  if (reps == 0) return out;

  const std::size_t ok = reps - out.failed_replicates;
  for (std::size_t t = 0; t < cfg.tests.size(); ++t) {
    std::size_t k = 0;
    for (std::size_t r = 0; r < reps; ++r)
      if (!failed[r]) k += static_cast<std::size_t>(flags[r][t]);
    RejectionRow row;
    row.test = to_string(cfg.tests[t]);
    row.setting = cfg.setting;
    row.n = cfg.n;
    row.d = cfg.d;
    row.rho = cfg.rho;
    row.reps = ok;
    row.reject_rate = ok == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(ok);
    std::tie(row.ci_lo, row.ci_hi) = wilson_interval(k, ok);
    out.rows.push_back(row);
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<RejectionRow>& rows) {
  out << "test,setting,n,d,rho,reps,reject_rate,ci_lo,ci_hi\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%zu,%zu,%.4f,%zu,%.6f,%.6f,%.6f\n", r.test.c_str(), r.setting, r.n, r.d,
                  r.rho, r.reps, r.reject_rate, r.ci_lo, r.ci_hi);
    out << buf;
  }
}

}  // namespace adanorm
