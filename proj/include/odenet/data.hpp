#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "odenet/integrate.hpp"

namespace odenet {

/// One experiment: observations y(t) on a (possibly irregular) grid.
///
/// Hidden dimensions (observed[i] == false) hold placeholder values that are
/// never read. `clean` and `injected_noise` are only present for synthetic
/// data and are used for diagnostics, never for fitting.
struct Trajectory {
  TimeGrid grid;
  Eigen::MatrixXd values;  // samples x d
  std::vector<bool> observed;
  std::optional<double> conserved_total;
  Eigen::MatrixXd clean;
  Eigen::MatrixXd injected_noise;

  std::size_t samples() const noexcept { return grid.size(); }
  int dimension() const noexcept { return static_cast<int>(values.cols()); }
  bool has_hidden() const;
  std::vector<int> observed_dims() const;

  /// Checks shape agreement and finiteness of observed columns.
  void validate() const;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::vector<std::string> state_names;

  int dimension() const;
  bool has_hidden() const;
  std::vector<bool> observed() const;
  std::size_t total_samples() const;
  void validate() const;
};

}  // namespace odenet

namespace odenet {

/// n+1 consecutive samples of one trajectory starting at `start`.
struct BatchPiece {
  std::size_t trajectory = 0;
  std::size_t start = 0;
};

struct Batch {
  std::size_t segment_length = 1;  // n: labels per piece
  std::vector<BatchPiece> pieces;
};

}  // namespace odenet
