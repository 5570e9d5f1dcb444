#include "odenet/data.hpp"

#include "odenet/error.hpp"

namespace odenet {

bool Trajectory::has_hidden() const {
  for (bool o : observed) {
    if (!o) return true;
  }
  return false;
}

std::vector<int> Trajectory::observed_dims() const {
  std::vector<int> dims;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i]) dims.push_back(static_cast<int>(i));
  }
  return dims;
}

void Trajectory::validate() const {
  if (static_cast<std::size_t>(values.rows()) != grid.size()) {
    throw Error(ErrorCode::InvalidDimension, "trajectory values do not match grid length");
  }
  if (observed.size() != static_cast<std::size_t>(values.cols())) {
    throw Error(ErrorCode::InvalidDimension, "observation mask does not match dimension");
  }
  for (int i : observed_dims()) {
    if (!values.col(i).allFinite()) {
      throw Error(ErrorCode::NonFiniteState, "non-finite observation");
    }
  }
}

int Dataset::dimension() const {
  if (trajectories.empty()) throw Error(ErrorCode::InsufficientData, "dataset is empty");
  return trajectories.front().dimension();
}

bool Dataset::has_hidden() const {
  for (const auto& t : trajectories) {
    if (t.has_hidden()) return true;
  }
  return false;
}

std::vector<bool> Dataset::observed() const {
  if (trajectories.empty()) throw Error(ErrorCode::InsufficientData, "dataset is empty");
  return trajectories.front().observed;
}

std::size_t Dataset::total_samples() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.samples();
  return n;
}

void Dataset::validate() const {
  const int d = dimension();
  const auto mask = observed();
  for (const auto& t : trajectories) {
    t.validate();
    if (t.dimension() != d) {
      throw Error(ErrorCode::InvalidDimension, "trajectories disagree on dimension");
    }
    if (t.observed != mask) {
      throw Error(ErrorCode::InvalidDimension, "trajectories disagree on observation mask");
    }
  }
  if (!state_names.empty() && static_cast<int>(state_names.size()) != d) {
    throw Error(ErrorCode::InvalidDimension, "state name count does not match dimension");
  }
}

}  // namespace odenet
