#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stanceforge {

enum class ErrorKind {
  Io,
  Malformed,
  DuplicateId,
  DanglingAnnotation,
  OverlappingSpans,
  OutOfRangeSpan,
  ConflictingEntry,
  InvalidArgument,
  SingleClass,
  DimensionMismatch,
  NotConverged,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Malformed: return "malformed";
    case ErrorKind::DuplicateId: return "duplicate-id";
    case ErrorKind::DanglingAnnotation: return "dangling-annotation";
    case ErrorKind::OverlappingSpans: return "overlapping-spans";
    case ErrorKind::OutOfRangeSpan: return "out-of-range-span";
    case ErrorKind::ConflictingEntry: return "conflicting-entry";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::SingleClass: return "single-class";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::NotConverged: return "not-converged";
  }
  return "unknown";
}

// Data errors raised by loaders, trainers and the evaluation driver. `line`
// is 1-based and 0 when the error is not tied to an input line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        kind_(kind),
        line_(line) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::size_t line_;
};

}  // namespace stanceforge
