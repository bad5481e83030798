#pragma once

#include <stdexcept>
#include <string>

namespace prodent {

enum class ErrorKind {
  InvalidModel,
  InvalidArgument,
  NonUniqueStationary,
  BudgetExceeded,
  InsufficientArrivals,
  InvalidTheta,
  NotMarkov,
  Overflow,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonUniqueStationary: return "NonUniqueStationary";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::InsufficientArrivals: return "InsufficientArrivals";
    case ErrorKind::InvalidTheta: return "InvalidTheta";
    case ErrorKind::NotMarkov: return "NotMarkov";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can report it by name.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace prodent
