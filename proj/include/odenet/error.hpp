#pragma once

#include <stdexcept>
#include <string>

namespace odenet {

enum class ErrorCode {
  InvalidArgument,
  InvalidDimension,
  NonFiniteState,
  OutOfRange,
  Grid,
  Divergence,
  Stiffness,
  StepBudget,
  Config,
  InsufficientData,
  DegenerateData,
  TrainingDiverged,
  BasisMismatch,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the integrators. `time` is where the solver gave up.
class IntegrationError : public Error {
 public:
  IntegrationError(ErrorCode code, double time, const std::string& what)
      : Error(code, what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace odenet
