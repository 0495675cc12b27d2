#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adanorm {

enum class ErrorKind {
  DomainError,
  DimensionMismatch,
  InvalidNorm,
  NotPositiveDefinite,
  InsufficientData,
  DegenerateOutcome,
  DegenerateCovariate,
  DegenerateVariance,
  NonPositiveSmoother,
  EmptyStratum,
  Separation,
  EmptyInput,
  PoleInput,
  InvalidSetting,
  ReplicateFailure,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Numeric failures (factorization, optimizer divergence) as opposed to
  /// problems with the caller's data or arguments.
  bool is_numeric() const noexcept {
    return kind_ == ErrorKind::NotPositiveDefinite || kind_ == ErrorKind::Separation;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace adanorm
