// adanorm: command line front end.
//
//   adanorm test --csv data.csv --estimator correlation
//   adanorm simulate --example 1 --setting 2 --n 200 --reps 250 --tests adaptive-lp,bonferroni
//   adanorm norms --spec ssq:2 --vec 3,-4,1
//   adanorm calibrate --d 10 --rho 0.3 > null.csv
//   adanorm generate --example 1 --setting 2 --n 500 --out data.csv
//
// Exit codes: 0 success, 2 usage error, 3 data or contract error,
// 4 numeric failure.

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adanorm/error.hpp"
#include "adanorm/estimators.hpp"
#include "adanorm/harness.hpp"
#include "adanorm/norms.hpp"
#include "adanorm/testkit.hpp"

namespace {

using namespace adanorm;

constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kNumeric = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  double alpha = 0.05;
  double tau = 0.2;
  std::size_t m_inner = 5000;
  std::size_t m_outer = 2000;
  int threads = 0;
  std::string measure = "mf";
  std::string family = "lp";
  std::string cauchy_form = "paper";

  MeasureConfig measure_config() const {
    MeasureConfig cfg;
    cfg.kind = measure == "ar" ? MeasureKind::AcceptanceRate : MeasureKind::MultiplicativeFactor;
    cfg.alpha = alpha;
    cfg.tau = tau;
    cfg.m_inner = m_inner;
    cfg.m_outer = m_outer;
    cfg.validate();
    return cfg;
  }
  CauchyForm cauchy() const { return cauchy_form == "canonical" ? CauchyForm::Canonical : CauchyForm::Paper; }
};

// ---------------------------------------------------------------------------
// CSV

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;

  std::ptrdiff_t find(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<std::ptrdiff_t>(c);
    return -1;
  }
  std::size_t require(const std::string& name) const {
    const auto c = find(name);
    if (c < 0) fail(ErrorKind::Io, "missing column '" + name + "'");
    return static_cast<std::size_t>(c);
  }
  /// Columns named prefix1, prefix2, ... in numeric order.
  std::vector<std::size_t> numbered(const std::string& prefix) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 1;; ++j) {
      const auto c = find(prefix + std::to_string(j));
      if (c < 0) break;
      out.push_back(static_cast<std::size_t>(c));
    }
    return out;
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Io, path + " is empty");
  t.header = split(line, ',');
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto row = split(line, ',');
    if (row.size() != t.header.size())
      fail(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                              " fields, found " + std::to_string(row.size()));
    t.cells.push_back(std::move(row));
  }
  return t;
}

double parse_number(const std::string& cell, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size() || cell.empty() || !std::isfinite(v)) fail(ErrorKind::Io, where + ": not a number: '" + cell + "'");
  return v;
}

double cell_value(const Table& t, std::size_t r, std::size_t c) {
  return parse_number(t.cells[r][c], "row " + std::to_string(r + 1) + ", column " + t.header[c]);
}

Matrix numbered_matrix(const Table& t, const std::string& prefix) {
  const auto cols = t.numbered(prefix);
  if (cols.empty()) fail(ErrorKind::Io, "no columns " + prefix + "1, " + prefix + "2, ...");
  Matrix m(t.cells.size(), cols.size());
  for (std::size_t r = 0; r < t.cells.size(); ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) m(r, j) = cell_value(t, r, cols[j]);
  return m;
}

std::vector<double> column_values(const Table& t, const std::string& name) {
  const std::size_t c = t.require(name);
  std::vector<double> v(t.cells.size());
  for (std::size_t r = 0; r < v.size(); ++r) v[r] = cell_value(t, r, c);
  return v;
}

std::vector<TwoPhaseRecord> two_phase_records(const Table& t) {
  const std::size_t cy = t.require("y");
  const std::size_t cd = t.require("delta");
  const auto cw = t.numbered("w");
  const auto cs = t.numbered("s");
  if (cs.empty()) fail(ErrorKind::Io, "no biomarker columns s1, s2, ...");
  std::vector<TwoPhaseRecord> records(t.cells.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    auto& rec = records[r];
    rec.y = static_cast<int>(cell_value(t, r, cy));
    rec.delta = static_cast<int>(cell_value(t, r, cd));
    for (std::size_t c : cw) rec.w.push_back(cell_value(t, r, c));
    if (rec.delta == 1)
      for (std::size_t c : cs) rec.s_tilde.push_back(cell_value(t, r, c));
  }
  return records;
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> v;
  for (const auto& cell : split(text, ',')) {
    try {
      v.push_back(parse_number(cell, "--vec"));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  return v;
}

CovMatrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line, ',')) row.push_back(parse_number(cell, path));
    rows.push_back(std::move(row));
  }
  for (const auto& r : rows)
    if (r.size() != rows.size()) fail(ErrorKind::Io, path + " is not a square matrix");
  return CovMatrix(Matrix::from_rows(rows));
}

std::ostream& output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) fail(ErrorKind::Io, "cannot write " + path);
  return file;
}

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Subcommands

struct TestArgs {
  std::string csv;
  std::string estimator = "correlation";
  std::string out;
  std::size_t b_reps = 400;
  std::size_t n_perm = 0;
};

int run_test_command(const Globals& g, const TestArgs& a) {
  const MeasureConfig cfg = g.measure_config();
  const Table t = read_csv(a.csv);
  if (t.cells.empty()) fail(ErrorKind::InsufficientData, a.csv + " has no data rows");

  TestOptions options;
  options.cauchy_form = g.cauchy();
  const SeededStream calib{g.seed, 0};

  TestReport report;
  if (a.estimator == "correlation") {
    const Matrix w = numbered_matrix(t, "w");
    const std::vector<double> y = column_values(t, "y");
    const auto family = parse_family(g.family, w.cols());
    if (a.n_perm > 0) {
      report = permutation_test(w, y, family, cfg, a.n_perm, {g.seed, 2}, options);
    } else {
      report = run_test(correlation_estimator(w, y), family, cfg, calib, options);
    }
  } else if (a.estimator == "loglinear") {
    const Matrix w = numbered_matrix(t, "w");
    const auto family = parse_family(g.family, w.cols());
    const EstimateResult est =
        loglinear_missing_estimator(w, column_values(t, "u"), column_values(t, "delta"), {}, {a.b_reps, {g.seed, 1}});
    report = run_test(est, family, cfg, calib, options);
  } else {
    const auto records = two_phase_records(t);
    const EstimateResult est = two_phase_estimate(records);
    report = run_test(est, parse_family(g.family, est.dim()), cfg, calib, options);
  }

  std::ofstream file;
  output(a.out, file) << to_json(report).dump(2) << '\n';
  return 0;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  int example = 1;
  int setting = 1;
  std::size_t n = 100;
  std::size_t d = 10;
  double rho = 0.0;
  std::size_t reps = 100;
  std::string tests = "adaptive-lp";
  double signal_scale = 1.0;
  std::size_t n_perm = 199;
  std::size_t b_reps = 400;
};

int run_simulate(const Globals& g, const SimulateArgs& a, const CLI::App& sub, const CLI::App& app) {
  ExperimentConfig cfg;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) fail(ErrorKind::Io, "cannot open " + a.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Io, a.config + ": " + e.what());
    }
    cfg = ExperimentConfig::from_json(j);
  } else {
    cfg.measure = g.measure_config();
    cfg.seed = g.seed;
    cfg.cauchy_form = g.cauchy();
  }
  // Flags given explicitly override the config file.
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (a.config.empty() || given("--example")) cfg.example = a.example;
  if (a.config.empty() || given("--setting")) cfg.setting = a.setting;
  if (a.config.empty() || given("--n")) cfg.n = a.n;
  if (a.config.empty() || given("--d")) cfg.d = a.d;
  if (a.config.empty() || given("--rho")) cfg.rho = a.rho;
  if (a.config.empty() || given("--reps")) cfg.reps = a.reps;
  if (a.config.empty() || given("--signal-scale")) cfg.signal_scale = a.signal_scale;
  if (a.config.empty() || given("--n-perm")) cfg.n_perm = a.n_perm;
  if (a.config.empty() || given("--b-reps")) cfg.b_reps = a.b_reps;
  if (a.config.empty() || given("--tests")) {
    cfg.tests.clear();
    for (const auto& name : split(a.tests, ',')) cfg.tests.push_back(parse_test_kind(name));
  }
  if (!a.config.empty()) {
    auto global = [&](const char* name) { return app.count(name) > 0 || sub.count(name) > 0; };
    if (global("--seed")) cfg.seed = g.seed;
    if (global("--cauchy-form")) cfg.cauchy_form = g.cauchy();
    if (global("--alpha") || global("--tau") || global("--m-inner") || global("--m-outer") || global("--measure")) {
      MeasureConfig m = g.measure_config();
      if (!global("--alpha")) m.alpha = cfg.measure.alpha;
      if (!global("--tau")) m.tau = cfg.measure.tau;
      if (!global("--m-inner")) m.m_inner = cfg.measure.m_inner;
      if (!global("--m-outer")) m.m_outer = cfg.measure.m_outer;
      if (!global("--measure")) m.kind = cfg.measure.kind;
      cfg.measure = m;
    }
  }
  cfg.validate();

  const ExperimentResult result = run_experiment(cfg);
  if (result.failed_replicates > 0)
    std::cerr << result.failed_replicates << " replicate(s) failed and were dropped\n";
  std::ofstream file;
  write_csv(output(a.out, file), result.rows);
  return 0;
}

int run_norms(const std::string& spec_text, const std::string& vec_text) {
  NormSpec spec = NormSpec::linf();
  try {
    spec = NormSpec::parse(spec_text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const std::vector<double> x = parse_vector(vec_text);
  std::cout << number(evaluate(spec, x)) << '\n';
  return 0;
}

struct CalibrateArgs {
  std::string sigma;
  std::size_t d = 10;
  double rho = 0.0;
  std::string out;
};

int run_calibrate(const Globals& g, const CalibrateArgs& a) {
  const MeasureConfig cfg = g.measure_config();
  CovMatrix sigma;
  if (!a.sigma.empty()) {
    sigma = read_matrix_csv(a.sigma);
  } else {
    if (a.d < 1) throw UsageError("--d must be positive");
    Matrix s(a.d, a.d, a.rho);
    for (std::size_t j = 0; j < a.d; ++j) s(j, j) = 1.0;
    sigma = CovMatrix(std::move(s));
  }
  const auto family = parse_family(g.family, sigma.dim());
  const CalibrationResult calib = calibrate_null(sigma, family, cfg, {g.seed, 0});

  std::ofstream file;
  std::ostream& out = output(a.out, file);
  out << "rank,z\n";
  for (std::size_t i = 0; i < calib.null_z_sorted.size(); ++i)
    out << i + 1 << ',' << number(calib.null_z_sorted[i]) << '\n';
  return 0;
}

struct GenerateArgs {
  int example = 1;
  int setting = 1;
  std::size_t n = 100;
  std::size_t d = 10;
  double rho = 0.0;
  std::string out;
};

int run_generate(const Globals& g, const GenerateArgs& a) {
  std::ofstream file;
  std::ostream& out = output(a.out, file);
  if (a.example == 1) {
    const Example1Data data = generate_example1(a.n, a.d, a.rho, a.setting, {g.seed, 0});
    out << 'y';
    for (std::size_t j = 1; j <= a.d; ++j) out << ",w" << j;
    out << '\n';
    for (std::size_t i = 0; i < a.n; ++i) {
      out << number(data.y[i]);
      for (double v : data.w.row(i)) out << ',' << number(v);
      out << '\n';
    }
  } else if (a.example == 2) {
    const Example2Data data = generate_example2(a.n, a.d, a.setting, {g.seed, 0});
    out << "u,delta";
    for (std::size_t j = 1; j <= a.d; ++j) out << ",w" << j;
    out << '\n';
    for (std::size_t i = 0; i < a.n; ++i) {
      out << number(data.u[i]) << ',' << number(data.delta[i]);
      for (double v : data.w.row(i)) out << ',' << number(v);
      out << '\n';
    }
  } else {
    throw UsageError("--example must be 1 or 2");
  }
  return 0;
}

int exit_code(const Error& e) {
  if (e.is_numeric()) return kNumeric;
  switch (e.kind()) {
    case ErrorKind::InvalidNorm:
    case ErrorKind::InvalidSetting:
    case ErrorKind::DomainError: return kUsage;
    default: return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-norm tests of a multivariate point null"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Root seed of all randomness");
  app.add_option("--alpha", g.alpha, "Nominal level")->capture_default_str();
  app.add_option("--tau", g.tau, "Type II target of the multiplicative factor")->capture_default_str();
  app.add_option("--m-inner", g.m_inner, "Draws behind each measure evaluation")->capture_default_str();
  app.add_option("--m-outer", g.m_outer, "Null draws of the adaptive statistic")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0: runtime default)");
  app.add_option("--measure", g.measure, "ar or mf")->check(CLI::IsMember({"ar", "mf"}))->capture_default_str();
  app.add_option("--family", g.family, "lp, ssq, or a list such as l2,linf,ssq:3")->capture_default_str();
  app.add_option("--cauchy-form", g.cauchy_form, "paper or canonical")
      ->check(CLI::IsMember({"paper", "canonical"}))
      ->capture_default_str();

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "Estimate, calibrate and test one dataset (JSON report)");
  test->add_option("--csv", test_args.csv, "Input data with a header row")->required();
  test->add_option("--estimator", test_args.estimator)
      ->check(CLI::IsMember({"correlation", "loglinear", "twophase"}))
      ->capture_default_str();
  test->add_option("--out", test_args.out, "Write the report here instead of stdout");
  test->add_option("--b-reps", test_args.b_reps, "Bootstrap replicates (loglinear)")->capture_default_str();
  test->add_option("--n-perm", test_args.n_perm, "Calibrate by permutation with this many permutations (correlation)");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Rejection-rate table of a simulation setting (CSV)");
  simulate->add_option("--config", sim_args.config, "JSON experiment config; flags override it");
  simulate->add_option("--out", sim_args.out);
  simulate->add_option("--example", sim_args.example)->check(CLI::IsMember({1, 2}));
  simulate->add_option("--setting", sim_args.setting);
  simulate->add_option("--n", sim_args.n);
  simulate->add_option("--d", sim_args.d);
  simulate->add_option("--rho", sim_args.rho);
  simulate->add_option("--reps", sim_args.reps);
  simulate->add_option("--tests", sim_args.tests, "Comma separated: adaptive-lp, adaptive-ssq, l2, linf, bonferroni, cauchy, permutation");
  simulate->add_option("--signal-scale", sim_args.signal_scale, "Multiplies the Example 1 coefficients");
  simulate->add_option("--n-perm", sim_args.n_perm);
  simulate->add_option("--b-reps", sim_args.b_reps);

  std::string spec_text;
  std::string vec_text;
  auto* norms = app.add_subcommand("norms", "Evaluate one norm on a vector");
  norms->add_option("--spec", spec_text, "l1, l2, l4, l6, linf, lp:<p> or ssq:<k>")->required();
  norms->add_option("--vec", vec_text, "Comma separated coordinates")->required();

  CalibrateArgs cal_args;
  auto* calibrate = app.add_subcommand("calibrate", "Null sample of the adaptive statistic (CSV)");
  calibrate->add_option("--sigma", cal_args.sigma, "Covariance matrix as a headerless CSV");
  calibrate->add_option("--d", cal_args.d, "Dimension of the equicorrelated default");
  calibrate->add_option("--rho", cal_args.rho, "Equicorrelation of the default");
  calibrate->add_option("--out", cal_args.out);

  GenerateArgs gen_args;
  auto* generate = app.add_subcommand("generate", "Write a simulated dataset as CSV");
  generate->add_option("--example", gen_args.example);
  generate->add_option("--setting", gen_args.setting);
  generate->add_option("--n", gen_args.n);
  generate->add_option("--d", gen_args.d);
  generate->add_option("--rho", gen_args.rho);
  generate->add_option("--out", gen_args.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (g.threads < 0) {
    std::cerr << "--threads must be non-negative\n";
    return kUsage;
  }
  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (*test) return run_test_command(g, test_args);
    if (*simulate) return run_simulate(g, sim_args, *simulate, app);
    if (*norms) return run_norms(spec_text, vec_text);
    if (*calibrate) return run_calibrate(g, cal_args);
    if (*generate) return run_generate(g, gen_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
