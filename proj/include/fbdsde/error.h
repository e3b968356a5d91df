#pragma once

#include <stdexcept>
#include <string>

namespace fbdsde {

enum class ErrorCode {
  kInvalidArgument,
  kResourceLimit,
  kUnsupportedConfiguration,
  kValidation,
  kDecouplingBreakdown,
  kRiccatiBlowup,
  kParse,
  kSchema,
};

const char* ErrorCodeName(ErrorCode code);

/// Single exception type for the library; `code()` tells callers (and the
/// CLI exit-status mapping) which failure class occurred.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fbdsde
