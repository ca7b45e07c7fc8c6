#include "vlfly/error.hpp"

#include <nlohmann/json.hpp>

namespace vlfly {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::GenerationFailure: return "generation-failure";
    case ErrorCode::EmptyTokenSequence: return "empty-token-sequence";
    case ErrorCode::ZeroVector: return "zero-vector";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::ProviderTimeout: return "provider-timeout";
    case ErrorCode::MalformedReply: return "malformed-reply";
    case ErrorCode::BadMagic: return "bad-magic";
    case ErrorCode::VersionUnsupported: return "version-unsupported";
    case ErrorCode::TruncatedFile: return "truncated-file";
    case ErrorCode::NormViolation: return "norm-violation";
    case ErrorCode::UnreachableGoal: return "unreachable-goal";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::UnlinkedRetrieval: return "unlinked-retrieval";
    case ErrorCode::NumericMismatch: return "numeric-mismatch";
  }
  return "unknown";
}

std::string Error::structured() const {
  nlohmann::json j;
  j["error"] = std::string(to_string(code_));
  j["detail"] = what();
  return j.dump();
}

}  // namespace vlfly
