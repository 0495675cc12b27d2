#include "adanorm/error.hpp"

namespace adanorm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidNorm: return "InvalidNorm";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DegenerateOutcome: return "DegenerateOutcome";
    case ErrorKind::DegenerateCovariate: return "DegenerateCovariate";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::NonPositiveSmoother: return "NonPositiveSmoother";
    case ErrorKind::EmptyStratum: return "EmptyStratum";
    case ErrorKind::Separation: return "Separation";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::PoleInput: return "PoleInput";
    case ErrorKind::InvalidSetting: return "InvalidSetting";
    case ErrorKind::ReplicateFailure: return "ReplicateFailure";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace adanorm
