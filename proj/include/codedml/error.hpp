#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace codedml {

enum class ErrorKind {
  DimensionMismatch,
  SingularSystem,
  NonFinite,
  ParseError,
  MissingColumn,
  BadSplitSize,
  InvalidSpec,
  EmptyResult,
  DensityOutOfRange,
  NonTermination,
  TooFewSamples,
  UnknownSample,
  AlreadyUnlearned,
  Io,
  SessionNotFound,
  StaleSession,
  SessionLocked,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::BadSplitSize: return "BadSplitSize";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::EmptyResult: return "EmptyResult";
    case ErrorKind::DensityOutOfRange: return "DensityOutOfRange";
    case ErrorKind::NonTermination: return "NonTermination";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::UnknownSample: return "UnknownSample";
    case ErrorKind::AlreadyUnlearned: return "AlreadyUnlearned";
    case ErrorKind::Io: return "Io";
    case ErrorKind::SessionNotFound: return "SessionNotFound";
    case ErrorKind::StaleSession: return "StaleSession";
    case ErrorKind::SessionLocked: return "SessionLocked";
  }
  return "Unknown";
}

/// Library-wide exception. `kind()` identifies the failure class; the message
/// carries the details (row/column, offending id, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace codedml
