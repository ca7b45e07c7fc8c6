#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vlfly {

enum class ErrorCode {
  InvalidArgument,
  GenerationFailure,
  EmptyTokenSequence,
  ZeroVector,
  DimensionMismatch,
  ProviderTimeout,
  MalformedReply,
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  NormViolation,
  UnreachableGoal,
  ShapeMismatch,
  Divergence,
  ParseError,
  IoError,
  UnlinkedRetrieval,
  NumericMismatch,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. `what()` holds the detail text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// One-line JSON record: {"error":"<code>","detail":"..."}.
  std::string structured() const;

 private:
  ErrorCode code_;
};

}  // namespace vlfly
