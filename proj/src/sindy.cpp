#include "odenet/sindy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "odenet/error.hpp"

namespace odenet {

Eigen::MatrixXd estimate_derivatives(const TimeGrid& grid, const Eigen::MatrixXd& values) {
  const std::size_t n = grid.size();
  if (n < 3) throw Error(ErrorCode::InsufficientData, "derivative estimation needs >= 3 samples");
  if (static_cast<std::size_t>(values.rows()) != n) {
    throw Error(ErrorCode::InvalidDimension, "values do not match grid length");
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (!(grid[k] > grid[k - 1])) throw Error(ErrorCode::Grid, "repeated or decreasing time values");
  }
  Eigen::MatrixXd der(values.rows(), values.cols());
  auto row = [&](std::size_t k) { return values.row(static_cast<Eigen::Index>(k)); };

  {
    const double h1 = grid[1] - grid[0], h2 = grid[2] - grid[1];
    der.row(0) = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * row(0) + (h1 + h2) / (h1 * h2) * row(1) -
                 h1 / (h2 * (h1 + h2)) * row(2);
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h1 = grid[k] - grid[k - 1], h2 = grid[k + 1] - grid[k];
    der.row(static_cast<Eigen::Index>(k)) = -h2 / (h1 * (h1 + h2)) * row(k - 1) +
                                            (h2 - h1) / (h1 * h2) * row(k) +
                                            h1 / (h2 * (h1 + h2)) * row(k + 1);
  }
  {
    const double h1 = grid[n - 2] - grid[n - 3], h2 = grid[n - 1] - grid[n - 2];
    der.row(static_cast<Eigen::Index>(n - 1)) = h2 / (h1 * (h1 + h2)) * row(n - 3) -
                                                (h1 + h2) / (h1 * h2) * row(n - 2) +
                                                (2.0 * h2 + h1) / (h2 * (h1 + h2)) * row(n - 1);
  }
  return der;
}

RegressionProblem build_regression_problem(const Dataset& dataset, const PolynomialBasis& basis) {
  if (dataset.has_hidden()) {
    throw Error(ErrorCode::InvalidArgument, "derivative regression needs fully observed states");
  }
  const int d = dataset.dimension();
  if (d != basis.dimension()) throw Error(ErrorCode::BasisMismatch, "basis dimension mismatch");
  const auto rows = static_cast<Eigen::Index>(dataset.total_samples());
  RegressionProblem p{Eigen::MatrixXd(rows, static_cast<Eigen::Index>(basis.size())),
                      Eigen::MatrixXd(rows, d)};
  Eigen::Index r = 0;
  for (const Trajectory& t : dataset.trajectories) {
    const Eigen::MatrixXd der = estimate_derivatives(t.grid, t.values);
    for (Eigen::Index k = 0; k < t.values.rows(); ++k, ++r) {
      p.features.row(r) = basis.evaluate(t.values.row(k).transpose()).transpose();
      p.targets.row(r) = der.row(k);
    }
  }
  return p;
}

namespace {

// Least squares restricted to `columns`; least-norm when rank deficient.
Eigen::VectorXd solve_subset(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                             const std::vector<Eigen::Index>& columns, bool& rank_deficient) {
  Eigen::MatrixXd a(features.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    a.col(static_cast<Eigen::Index>(c)) = features.col(columns[c]);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  if (cod.rank() < a.cols()) rank_deficient = true;
  return cod.solve(target);
}

}  // namespace

StlsqResult stlsq(const RegressionProblem& problem, double threshold, int max_rounds) {
  if (problem.features.rows() != problem.targets.rows()) {
    throw Error(ErrorCode::InvalidDimension, "feature and target row counts differ");
  }
  if (!(threshold >= 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be >= 0");
  if (max_rounds < 1) throw Error(ErrorCode::InvalidArgument, "max_rounds must be >= 1");
  const auto d = static_cast<int>(problem.targets.cols());
  const auto m = static_cast<int>(problem.features.cols());

  StlsqResult result{CoefficientMatrix(d, m), 0, false};
  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(d, m);
  std::vector<std::vector<bool>> keep(static_cast<std::size_t>(d), std::vector<bool>(static_cast<std::size_t>(m), true));

  for (int i = 0; i < d; ++i) {
    auto& active = keep[static_cast<std::size_t>(i)];
    for (int round = 1; round <= max_rounds; ++round) {
      std::vector<Eigen::Index> cols;
      for (int j = 0; j < m; ++j) {
        if (active[static_cast<std::size_t>(j)]) cols.push_back(j);
      }
      coef.row(i).setZero();
      if (cols.empty()) break;
      const Eigen::VectorXd sol = solve_subset(problem.features, problem.targets.col(i), cols,
                                               result.rank_deficient);
      bool changed = false;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const double v = sol[static_cast<Eigen::Index>(c)];
        if (std::abs(v) < threshold) {
          active[static_cast<std::size_t>(cols[c])] = false;
          changed = true;
        } else {
          coef(i, cols[c]) = v;
        }
      }
      result.rounds = std::max(result.rounds, round);
      if (!changed) break;
      if (round == max_rounds) {
        // Thresholded entries were zeroed; the survivors keep their last fit.
        break;
      }
    }
  }
  result.coefficients = CoefficientMatrix(coef);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < m; ++j) {
      if (!keep[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) result.coefficients.deactivate(i, j);
    }
  }
  return result;
}

ModelComparison compare_models(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& fitted) {
  if (truth.rows() != fitted.rows() || truth.cols() != fitted.cols()) {
    throw Error(ErrorCode::BasisMismatch, "coefficient matrices have different shapes");
  }
  ModelComparison c;
  c.relative_errors = Eigen::MatrixXd::Constant(truth.rows(), truth.cols(),
                                                std::numeric_limits<double>::quiet_NaN());
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    for (Eigen::Index j = 0; j < truth.cols(); ++j) {
      const bool t = truth(i, j) != 0.0;
      const bool f = fitted(i, j) != 0.0;
      c.true_active += t ? 1 : 0;
      c.fitted_active += f ? 1 : 0;
      if (t && f) ++hits;
      if (!t && f) ++c.spurious;
      if (t && !f) ++c.missed;
      if (t) {
        const double rel = std::abs(fitted(i, j) - truth(i, j)) / std::abs(truth(i, j));
        c.relative_errors(i, j) = rel;
        c.max_relative_error = std::max(c.max_relative_error, rel);
      }
    }
  }
  c.precision = c.fitted_active == 0 ? (c.true_active == 0 ? 1.0 : 0.0)
                                     : static_cast<double>(hits) / static_cast<double>(c.fitted_active);
  c.recall = c.true_active == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(c.true_active);
  return c;
}

bool identification_failed(const ModelComparison& cmp) {
  return cmp.recall < 1.0 || cmp.max_relative_error > 0.5;
}

SindySweepResult stlsq_sweep(const RegressionProblem& problem, const std::vector<double>& thresholds,
                             int max_rounds, std::uint64_t seed) {
  if (thresholds.empty()) throw Error(ErrorCode::InvalidArgument, "threshold grid is empty");
  const Eigen::Index n = problem.features.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const Eigen::Index n_train = std::max<Eigen::Index>(1, (n * 4) / 5);

  auto take = [&](Eigen::Index from, Eigen::Index to) {
    RegressionProblem p{Eigen::MatrixXd(to - from, problem.features.cols()),
                        Eigen::MatrixXd(to - from, problem.targets.cols())};
    for (Eigen::Index r = from; r < to; ++r) {
      p.features.row(r - from) = problem.features.row(order[static_cast<std::size_t>(r)]);
      p.targets.row(r - from) = problem.targets.row(order[static_cast<std::size_t>(r)]);
    }
    return p;
  };
  const RegressionProblem train = take(0, n_train);
  const RegressionProblem valid = n_train < n ? take(n_train, n) : train;

  SindySweepResult out;
  out.validation_residual = std::numeric_limits<double>::infinity();
  for (double lambda : thresholds) {
    const StlsqResult fit = stlsq(train, lambda, max_rounds);
    const Eigen::MatrixXd pred = valid.features * fit.coefficients.values().transpose();
    const double residual = (pred - valid.targets).squaredNorm() / static_cast<double>(valid.targets.rows());
    out.thresholds.push_back(lambda);
    out.residuals.push_back(residual);
    if (residual < out.validation_residual) {
      out.validation_residual = residual;
      out.threshold = lambda;
    }
  }
  out.best = stlsq(problem, out.threshold, max_rounds);
  return out;
}

}  // namespace odenet
