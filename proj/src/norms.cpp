#include "adanorm/norms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "adanorm/error.hpp"

namespace adanorm {

namespace {

enum class PowerPath { One, Two, Four, Six, General };

PowerPath power_path(double p) {
  if (p == 1.0) return PowerPath::One;
  if (p == 2.0) return PowerPath::Two;
  if (p == 4.0) return PowerPath::Four;
  if (p == 6.0) return PowerPath::Six;
  return PowerPath::General;
}

double max_factored(double p, std::span<const double> x) {
  double big = 0.0;
  for (double v : x) big = std::max(big, std::abs(v));
  if (big == 0.0) return 0.0;
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v) / big, p);
  return big * std::pow(s, 1.0 / p);
}

double sum_top_squares(std::size_t k, std::span<const double> x) {
  const std::size_t d = x.size();
  double s = 0.0;
  if (k == d) {
    for (double v : x) s += v * v;
    return s;
  }
  std::vector<double> sq(d);
  for (std::size_t j = 0; j < d; ++j) sq[j] = x[j] * x[j];
  if (k == 1) return *std::max_element(sq.begin(), sq.end());
  std::sort(sq.begin(), sq.end());
  for (std::size_t q = 0; q < k; ++q) s += sq[d - 1 - q];
  return s;
}

std::size_t parse_size(std::string_view text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorKind::InvalidNorm, "bad integer '" + std::string(text) + "'");
  return v;
}

double parse_real(std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorKind::InvalidNorm, "bad number '" + std::string(text) + "'");
  return v;
}

std::string format_real(double p) {
  if (p == std::floor(p) && p < 1e15) return std::to_string(static_cast<long long>(p));
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), p);
  return std::string(buf, ptr);
}

}  // namespace

NormSpec NormSpec::lp(double p) {
  if (std::isinf(p) && p > 0) return linf();
  if (!(p >= 1.0)) fail(ErrorKind::InvalidNorm, "l_p needs p >= 1, got " + std::to_string(p));
  return NormSpec(Kind::Lp, p, 0);
}

NormSpec NormSpec::sum_squares(std::size_t k) {
  if (k == 0) fail(ErrorKind::InvalidNorm, "sum-of-squares norm needs k >= 1");
  return NormSpec(Kind::SumSquares, 0.0, k);
}

NormSpec NormSpec::parse(std::string_view text) {
  if (text == "linf") return linf();
  if (text.starts_with("ssq:")) return sum_squares(parse_size(text.substr(4)));
  if (text.starts_with("lp:")) return lp(parse_real(text.substr(3)));
  if (text.size() > 1 && text.front() == 'l') return lp(parse_real(text.substr(1)));
  fail(ErrorKind::InvalidNorm, "unknown norm '" + std::string(text) + "'");
}

std::string NormSpec::name() const {
  switch (kind_) {
    case Kind::LInf:
      return "linf";
    case Kind::SumSquares:
      return "ssq:" + std::to_string(k_);
    case Kind::Lp:
      if (p_ == std::floor(p_) && p_ < 1e6) return "l" + format_real(p_);
      return "lp:" + format_real(p_);
  }
  return {};
}

void NormSpec::check_dimension(std::size_t d) const {
  if (kind_ == Kind::SumSquares && k_ > d)
    fail(ErrorKind::DimensionMismatch, "ssq:" + std::to_string(k_) + " needs d >= k, got d = " + std::to_string(d));
}

double gauge::of_vector(const NormSpec& spec, std::span<const double> x) {
  switch (spec.kind()) {
    case NormSpec::Kind::LInf: {
      double m = 0.0;
      for (double v : x) m = std::max(m, std::abs(v));
      return m;
    }
    case NormSpec::Kind::SumSquares:
      spec.check_dimension(x.size());
      return sum_top_squares(spec.k(), x);
    case NormSpec::Kind::Lp:
      break;
  }
  double s = 0.0;
  switch (power_path(spec.p())) {
    case PowerPath::One:
      for (double v : x) s += std::abs(v);
      return s;
    case PowerPath::Two:
      for (double v : x) s += v * v;
      return s;
    case PowerPath::Four:
      for (double v : x) {
        const double q = v * v;
        s += q * q;
      }
      return s;
    case PowerPath::Six:
      for (double v : x) {
        const double q = v * v;
        s += q * q * q;
      }
      return s;
    case PowerPath::General:
      return max_factored(spec.p(), x);
  }
  return s;
}

double gauge::to_norm(const NormSpec& spec, double g) {
  switch (spec.kind()) {
    case NormSpec::Kind::LInf:
      return g;
    case NormSpec::Kind::SumSquares:
      return std::sqrt(g);
    case NormSpec::Kind::Lp:
      break;
  }
  switch (power_path(spec.p())) {
    case PowerPath::Two:
      return std::sqrt(g);
    case PowerPath::Four:
      return std::sqrt(std::sqrt(g));
    case PowerPath::Six:
      return std::cbrt(std::sqrt(g));
    default:
      return g;
  }
}

double gauge::from_norm(const NormSpec& spec, double r) {
  switch (spec.kind()) {
    case NormSpec::Kind::LInf:
      return r;
    case NormSpec::Kind::SumSquares:
      return r * r;
    case NormSpec::Kind::Lp:
      break;
  }
  switch (power_path(spec.p())) {
    case PowerPath::Two:
      return r * r;
    case PowerPath::Four:
      return (r * r) * (r * r);
    case PowerPath::Six:
      return (r * r) * (r * r) * (r * r);
    default:
      return r;
  }
}

double evaluate(const NormSpec& spec, std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) fail(ErrorKind::DomainError, "norm argument must be finite");
  return gauge::to_norm(spec, gauge::of_vector(spec, x));
}

std::vector<NormSpec> default_family(FamilyKind kind, std::size_t d) {
  if (kind == FamilyKind::Lp)
    return {NormSpec::lp(1), NormSpec::lp(2), NormSpec::lp(4), NormSpec::lp(6), NormSpec::linf()};

  std::vector<std::size_t> ks;
  if (d == 10) {
    ks = {1, 3, 5, 6, 8, 10};
  } else if (d == 50) {
    ks = {1, 11, 21, 30, 40, 50};
  } else if (d == 100) {
    ks = {1, 21, 41, 60, 80, 100};
  } else {
    for (int i = 0; i < 6; ++i) {
      const double k = 1.0 + (static_cast<double>(d) - 1.0) * i / 5.0;
      ks.push_back(static_cast<std::size_t>(std::llround(k)));
    }
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  }
  std::vector<NormSpec> out;
  for (std::size_t k : ks) out.push_back(NormSpec::sum_squares(k));
  return out;
}

std::vector<NormSpec> parse_family(std::string_view text, std::size_t d) {
  if (text == "lp") return default_family(FamilyKind::Lp, d);
  if (text == "ssq") return default_family(FamilyKind::SumSquares, d);
  std::vector<NormSpec> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view item = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    if (!item.empty()) out.push_back(NormSpec::parse(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) fail(ErrorKind::InvalidNorm, "empty norm family");
  for (const auto& spec : out) spec.check_dimension(d);
  return out;
}

std::string family_fingerprint(std::span<const NormSpec> family) {
  std::string out;
  for (const auto& spec : family) {
    if (!out.empty()) out += ',';
    out += spec.name();
  }
  return out;
}

}  // namespace adanorm
