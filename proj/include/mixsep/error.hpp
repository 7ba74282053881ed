#ifndef MIXSEP_ERROR_HPP
#define MIXSEP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mixsep {

/// Error categories surfaced to callers and to the CLI's machine-readable error line.
enum class ErrorCode {
  InvalidSpec,
  DimensionMismatch,
  RankDeficient,
  BudgetExceeded,
  Precondition,
  Io,
  Parse,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpec: return "invalid_spec";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::RankDeficient: return "rank_deficient";
    case ErrorCode::BudgetExceeded: return "budget_exceeded";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace mixsep

#endif  // MIXSEP_ERROR_HPP
