#pragma once

#include <stdexcept>
#include <string>

namespace kam {

// Failure classes map one-to-one onto CLI exit codes.
enum class ErrorClass {
  Usage = 1,      // bad arguments, unreadable or invalid config
  Condition = 2,  // a required inequality of the scheme is not met
  Numerical = 3,  // a numerical procedure failed (budget, contraction, ...)
};

class KamError : public std::runtime_error {
 public:
  KamError(ErrorClass cls, std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), class_(cls), kind_(std::move(kind)) {}

  ErrorClass error_class() const noexcept { return class_; }
  const std::string& kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(class_); }

 private:
  ErrorClass class_;
  std::string kind_;
};

struct UsageError : KamError {
  explicit UsageError(const std::string& what) : KamError(ErrorClass::Usage, "usage", what) {}
};

struct ConditionError : KamError {
  ConditionError(std::string kind, const std::string& what)
      : KamError(ErrorClass::Condition, std::move(kind), what) {}
};

struct NumericalError : KamError {
  NumericalError(std::string kind, const std::string& what)
      : KamError(ErrorClass::Numerical, std::move(kind), what) {}
};

// Convenience constructors for the named failure kinds.
inline ConditionError resonance_error(const std::string& w) { return {"resonance", w}; }
inline ConditionError domain_error(const std::string& w) { return {"domain", w}; }
inline ConditionError step_condition_error(const std::string& w) { return {"step-condition", w}; }
inline ConditionError schedule_error(const std::string& w) { return {"schedule", w}; }
inline NumericalError budget_error(const std::string& w) { return {"budget", w}; }
inline NumericalError table_error(const std::string& w) { return {"needs-larger-table", w}; }

}  // namespace kam
