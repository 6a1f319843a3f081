#pragma once

#include <stdexcept>
#include <string>

namespace qnme {

enum class ErrorCode {
  validation,
  size,
  shape,
  range,
  budget_exceeded,
  turn_order,
  insufficient_oracles,
  schedule,
  memory,
  construction,
  contract,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::size: return "size";
    case ErrorCode::shape: return "shape";
    case ErrorCode::range: return "range";
    case ErrorCode::budget_exceeded: return "BudgetExceeded";
    case ErrorCode::turn_order: return "TurnOrderViolation";
    case ErrorCode::insufficient_oracles: return "InsufficientOracles";
    case ErrorCode::schedule: return "schedule";
    case ErrorCode::memory: return "memory";
    case ErrorCode::construction: return "construction";
    case ErrorCode::contract: return "contract";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace qnme
