#pragma once

#include <cstddef>
#include <span>

#include "adanorm/gauss.hpp"
#include "adanorm/norms.hpp"

// Inner Monte Carlo kernels behind the inefficiency measures.
//
// Everything here reduces to one question: for a shift t, how many rows u_i of
// the draw matrix satisfy gauge(u_i + t) <= gauge_c0? Two implementations:
//
//   reference::  one row at a time through gauge::of_vector, every count over
//                all m rows. Kept as the test oracle.
//   blocked::    column-major blocks the compiler vectorizes, and a
//                multiplicative-factor search that stops re-evaluating rows
//                whose state on the current bracket is already decided.
//
// Both round identically (same operation order, no contraction), so they
// return bit-identical counts and search results.

namespace adanorm::kernels {

struct RaySearch {
  double tau = 0.2;
  double rel_tol = 1e-6;
  int max_doublings = 60;
};

/// Inputs shared by every evaluation against one norm calibration.
struct NormDraws {
  const DrawMatrix& draws;
  const NormSpec& spec;
  double gauge_c0;                       ///< acceptance iff gauge(u + t) <= gauge_c0
  std::span<const double> row_gauges;    ///< gauge(u_i), in row order
};

namespace reference {

std::size_t count_accepted(const NormDraws& nd, std::span<const double> shift);

/// min{s >= 0 : count(s x)/m <= tau} by bracketing [0,1], doubling, then
/// bisection until (hi - lo) <= rel_tol * hi. +inf for x = 0 or when the
/// bracket cannot be closed within max_doublings.
double multiplicative_factor(const NormDraws& nd, std::span<const double> x, const RaySearch& search);

/// multiplicative_factor(nd, x, search) <= z, decided by running the same
/// search only until its bracket excludes z.
bool factor_at_most(const NormDraws& nd, std::span<const double> x, const RaySearch& search, double z);

}  // namespace reference

namespace blocked {

/// gauge(u_i + shift) for all rows, written to out (length m).
void row_gauges(const NormDraws& nd, std::span<const double> shift, std::span<double> out);

std::size_t count_accepted(const NormDraws& nd, std::span<const double> shift);

double multiplicative_factor(const NormDraws& nd, std::span<const double> x, const RaySearch& search);

bool factor_at_most(const NormDraws& nd, std::span<const double> x, const RaySearch& search, double z);

}  // namespace blocked

}  // namespace adanorm::kernels
