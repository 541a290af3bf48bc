#pragma once

#include <stdexcept>
#include <string>

namespace coremech {

// Error kinds surfaced by the engine. The CLI maps classes of these to
// distinct exit codes; library callers can switch on the code.
enum class ErrorCode {
  kOutOfDomain,
  kSchemaViolation,
  kUnsupportedStructure,
  kDisconnectedNetwork,
  kNonconvexUnsupported,
  kNonconvexBids,
  kDualsUnavailable,
  kRemovalInfeasible,
  kInfeasibleDispatch,
  kCapExceeded,
  kIterationLimit,
  kEmptyPolytope,
  kMissingTrueCurve,
  kLosingBidder,
  kNotCoreMember,
  kSolverFailure,
  kIoError,
  kInvalidArgument,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOutOfDomain: return "OutOfDomain";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kUnsupportedStructure: return "UnsupportedStructure";
    case ErrorCode::kDisconnectedNetwork: return "DisconnectedNetwork";
    case ErrorCode::kNonconvexUnsupported: return "NonconvexUnsupported";
    case ErrorCode::kNonconvexBids: return "NonconvexBids";
    case ErrorCode::kDualsUnavailable: return "DualsUnavailable";
    case ErrorCode::kRemovalInfeasible: return "RemovalInfeasible";
    case ErrorCode::kInfeasibleDispatch: return "InfeasibleDispatch";
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kIterationLimit: return "IterationLimit";
    case ErrorCode::kEmptyPolytope: return "EmptyPolytope";
    case ErrorCode::kMissingTrueCurve: return "MissingTrueCurve";
    case ErrorCode::kLosingBidder: return "LosingBidder";
    case ErrorCode::kNotCoreMember: return "NotCoreMember";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace coremech
