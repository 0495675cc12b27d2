#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adanorm {

/// A member of the candidate norm family: an l_p norm (p in [1, inf]) or the
/// sum-of-squares norm j_k (root of the k largest squared coordinates).
class NormSpec {
 public:
  enum class Kind { Lp, LInf, SumSquares };

  static NormSpec lp(double p);  ///< throws InvalidNorm if p < 1
  static NormSpec linf() { return NormSpec(Kind::LInf, 0.0, 0); }
  static NormSpec sum_squares(std::size_t k);  ///< throws InvalidNorm if k == 0

  /// Parses "l1", "l2", "l4", "l6", "linf", "lp:<p>", "ssq:<k>".
  static NormSpec parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  std::size_t k() const noexcept { return k_; }

  /// Canonical name; inverse of parse().
  std::string name() const;

  /// Throws DimensionMismatch if this spec cannot be evaluated in dimension d.
  void check_dimension(std::size_t d) const;

  friend bool operator==(const NormSpec&, const NormSpec&) = default;

 private:
  NormSpec(Kind kind, double p, std::size_t k) : kind_(kind), p_(p), k_(k) {}

  Kind kind_ = Kind::LInf;
  double p_ = 0.0;
  std::size_t k_ = 0;
};

/// ||x||_p, max|x_j|, or j_k(x). Exponents other than 1, 2, 4 and 6 use
/// max-factoring, m * (sum (|x_j|/m)^p)^(1/p), and never overflow.
/// j_k adds its k largest squares from the largest down; j_d sums all squares
/// in coordinate order and j_1 takes the largest square, so j_d == l_2 and
/// j_1 == l_inf hold bit for bit.
double evaluate(const NormSpec& spec, std::span<const double> x);

enum class FamilyKind { Lp, SumSquares };

/// lp -> {l1, l2, l4, l6, linf}; ssq -> the k-grid used for d in {10, 50, 100},
/// otherwise six evenly spaced k from 1 to d (rounded, deduplicated).
std::vector<NormSpec> default_family(FamilyKind kind, std::size_t d);

/// "lp", "ssq", or a comma separated list of norm names.
std::vector<NormSpec> parse_family(std::string_view text, std::size_t d);

/// Stable text identifier of a family, e.g. "l1,l2,linf".
std::string family_fingerprint(std::span<const NormSpec> family);

namespace gauge {

// A gauge is a monotone transform of the norm that is cheaper to compute:
// the p-th power sum for p in {1,2,4,6}, the squared value for j_k, the norm
// itself otherwise. All acceptance decisions compare gauges, so the same
// arithmetic decides ties everywhere.

double of_vector(const NormSpec& spec, std::span<const double> x);
double to_norm(const NormSpec& spec, double g);
double from_norm(const NormSpec& spec, double r);

}  // namespace gauge

}  // namespace adanorm
