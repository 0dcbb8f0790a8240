#pragma once

#include <stdexcept>
#include <string>

namespace nphmm {

enum class ErrorKind {
  InvalidArgument,
  Domain,
  Numerical,
  InsufficientData,
  IllConditionedMoments,
  DiagonalizationFailure,
  OptimizationStalled,
  NoUniqueStationary,
  Precondition,
  Io,
  Schema,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a machine-readable kind so the
// CLI can emit a structured error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace nphmm
