#pragma once

#include <stdexcept>
#include <string>

namespace dynblock {

// Base for every error the library throws. what() carries a human-readable
// message; kind() is a stable token used by the CLI's machine-parseable lines.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define DYNBLOCK_DEFINE_ERROR(Name, token)                  \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& message)               \
        : Error(token, message) {}                          \
  };

DYNBLOCK_DEFINE_ERROR(InvalidSpace, "invalid-space")
DYNBLOCK_DEFINE_ERROR(InvalidArgument, "invalid-argument")
DYNBLOCK_DEFINE_ERROR(DegenerateSteadyState, "degenerate-steady-state")
DYNBLOCK_DEFINE_ERROR(ConvergenceFailure, "convergence-failure")
DYNBLOCK_DEFINE_ERROR(UnsupportedConfiguration, "unsupported-configuration")
DYNBLOCK_DEFINE_ERROR(RangeError, "range-error")
DYNBLOCK_DEFINE_ERROR(EmptyWindow, "empty-window")
DYNBLOCK_DEFINE_ERROR(NotSettled, "not-settled")
DYNBLOCK_DEFINE_ERROR(ConfigError, "config-error")

#undef DYNBLOCK_DEFINE_ERROR

// Raised when the density matrix leaves its admissible set during a run.
class IntegratorFailure : public Error {
 public:
  IntegratorFailure(double time, const std::string& message)
      : Error("integrator-failure",
              "integrator failure at t=" + std::to_string(time) + ": " + message),
        time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace dynblock
