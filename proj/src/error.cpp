#include "odenet/error.hpp"

namespace odenet {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::InvalidDimension: return "invalid dimension";
    case ErrorCode::NonFiniteState: return "non-finite state";
    case ErrorCode::OutOfRange: return "out of range";
    case ErrorCode::Grid: return "invalid time grid";
    case ErrorCode::Divergence: return "integration diverged";
    case ErrorCode::Stiffness: return "step size underflow";
    case ErrorCode::StepBudget: return "step budget exhausted";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::InsufficientData: return "insufficient data";
    case ErrorCode::DegenerateData: return "degenerate data";
    case ErrorCode::TrainingDiverged: return "training diverged";
    case ErrorCode::BasisMismatch: return "basis mismatch";
    case ErrorCode::Io: return "i/o error";
  }
  return "unknown error";
}

}  // namespace odenet
