#include "fbdsde/error.h"

namespace fbdsde {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kResourceLimit:
      return "resource-limit";
    case ErrorCode::kUnsupportedConfiguration:
      return "unsupported-configuration";
    case ErrorCode::kValidation:
      return "validation";
    case ErrorCode::kDecouplingBreakdown:
      return "decoupling-breakdown";
    case ErrorCode::kRiccatiBlowup:
      return "riccati-blowup";
    case ErrorCode::kParse:
      return "parse";
    case ErrorCode::kSchema:
      return "schema";
  }
  return "unknown";
}

}  // namespace fbdsde
