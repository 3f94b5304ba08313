#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synthaudit {

enum class ErrorCode {
  io,
  empty_dataset,
  invalid_split,
  invalid_input,
  schema_mismatch,
  insufficient_data,
  convergence,
  singular,
  separation,
  degenerate,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::empty_dataset: return "empty_dataset";
    case ErrorCode::invalid_split: return "invalid_split";
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::schema_mismatch: return "schema_mismatch";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::singular: return "singular";
    case ErrorCode::separation: return "separation";
    case ErrorCode::degenerate: return "degenerate";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code so the
/// pipeline can record it per trial instead of aborting the run.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace synthaudit
