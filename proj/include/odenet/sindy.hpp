#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "odenet/basis.hpp"
#include "odenet/data.hpp"
#include "odenet/model.hpp"

namespace odenet {

/// Per-sample derivative estimates on a possibly non-uniform grid: three-point
/// central differences in the interior, three-point one-sided at the ends.
/// All formulas are exact for quadratics.
Eigen::MatrixXd estimate_derivatives(const TimeGrid& grid, const Eigen::MatrixXd& values);

struct RegressionProblem {
  Eigen::MatrixXd features;  // N x M basis evaluations
  Eigen::MatrixXd targets;   // N x d derivative estimates
};

/// Stacks every trajectory of a fully observed dataset.
RegressionProblem build_regression_problem(const Dataset& dataset, const PolynomialBasis& basis);

struct StlsqResult {
  CoefficientMatrix coefficients;  // pruned terms inactive
  int rounds = 0;
  bool rank_deficient = false;     // a least-norm solve was needed
};

/// Sequentially thresholded least squares, one regression per state dimension.
StlsqResult stlsq(const RegressionProblem& problem, double threshold, int max_rounds = 10);

struct ModelComparison {
  double precision = 1.0;
  double recall = 1.0;
  double max_relative_error = 0.0;  // over the true non-zero entries
  std::size_t true_active = 0;
  std::size_t fitted_active = 0;
  std::size_t spurious = 0;
  std::size_t missed = 0;
  Eigen::MatrixXd relative_errors;  // NaN where the truth is zero
  bool exact_support() const { return spurious == 0 && missed == 0; }
};

/// Support of a matrix is its non-zero entries.
ModelComparison compare_models(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& fitted);

/// recall < 1 or max relative error > 50% counts as a failed identification.
bool identification_failed(const ModelComparison& cmp);

struct SindySweepResult {
  StlsqResult best;
  double threshold = 0.0;
  double validation_residual = 0.0;
  std::vector<double> thresholds;
  std::vector<double> residuals;
};

/// Fits STLSQ for every threshold on a seeded 80/20 split of the rows and
/// keeps the one with the lowest validation residual, then refits on all rows.
SindySweepResult stlsq_sweep(const RegressionProblem& problem, const std::vector<double>& thresholds,
                             int max_rounds, std::uint64_t seed);

}  // namespace odenet
