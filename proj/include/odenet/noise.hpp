#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "odenet/data.hpp"

namespace odenet {

/// Per-dimension sup norm ‖y‖∞ over the rows of `values`.
Eigen::VectorXd sup_norm_per_dimension(const Eigen::MatrixXd& values);

struct NoisyValues {
  Eigen::MatrixXd values;
  Eigen::MatrixXd noise;  // the realization that was added
};

/// y + eps * ‖y‖∞ * eta with eta ~ N(0, 1) i.i.d. per sample and dimension.
/// Dimensions with observed[i] == false are left untouched.
NoisyValues inject_noise(const Eigen::MatrixXd& values, double eps, std::mt19937_64& rng,
                         const std::vector<bool>& observed = {});

/// Learnable offsets ê, one per sample per observed dimension per trajectory.
struct NoiseField {
  std::vector<int> observed_dims;
  std::vector<Eigen::MatrixXd> offsets;  // per trajectory: samples x observed_dims.size()
  Eigen::VectorXd scale_reference;       // ‖y‖∞ per full state dimension

  std::size_t trajectory_count() const noexcept { return offsets.size(); }
  /// Offset for full-state dimension `dim`; 0 for hidden dimensions.
  double offset(std::size_t traj, std::size_t sample, int dim) const;
  /// Column of `dim` inside offsets, or -1 when hidden.
  int column_of(int dim) const;
};

/// All-zero offsets shaped like the dataset. eps_guess only has to be >= 0.
NoiseField initialize_noise_field(const Dataset& dataset, double eps_guess);

struct DimensionNoiseReport {
  int dimension = 0;
  std::size_t samples = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double excess_kurtosis = 0.0;
  bool degenerate = false;  // zero spread
  std::vector<double> bin_centers;
  std::vector<std::size_t> counts;
  std::vector<double> reference_density;  // normal pdf at the bin centers
};

/// 40 uniform bins over mean ± 4 std, per observed dimension.
std::vector<DimensionNoiseReport> noise_gaussianity_report(const NoiseField& field);

/// "dimension,bin_center,count,reference_density" rows.
std::string noise_report_csv(const std::vector<DimensionNoiseReport>& reports);

/// Pearson correlation between learned offsets and a reference realization
/// (samples x d per trajectory) for one full-state dimension.
double noise_correlation(const NoiseField& field, const std::vector<Eigen::MatrixXd>& reference,
                         int dim);

}  // namespace odenet
