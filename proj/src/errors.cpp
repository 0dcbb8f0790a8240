#include "nphmm/errors.hpp"

namespace nphmm {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Domain: return "domain-error";
    case ErrorKind::Numerical: return "numerical-error";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::IllConditionedMoments: return "ill-conditioned-moments";
    case ErrorKind::DiagonalizationFailure: return "diagonalization-failure";
    case ErrorKind::OptimizationStalled: return "optimization-stalled";
    case ErrorKind::NoUniqueStationary: return "no-unique-stationary";
    case ErrorKind::Precondition: return "precondition-error";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::Schema: return "schema-error";
  }
  return "unknown";
}

}  // namespace nphmm
