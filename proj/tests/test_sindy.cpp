#include <cmath>

#include "doctest.h"
#include "odenet/sindy.hpp"
#include "odenet/systems.hpp"

using namespace odenet;

TEST_CASE("finite differences are exact for quadratics") {
  const TimeGrid grid({0.0, 0.1, 0.25, 0.3, 0.7, 1.0});
  Eigen::MatrixXd v(6, 2);
  for (std::size_t k = 0; k < 6; ++k) {
    const double t = grid[k];
    v(static_cast<Eigen::Index>(k), 0) = t * t;
    v(static_cast<Eigen::Index>(k), 1) = 4.0;
  }
  const Eigen::MatrixXd d = estimate_derivatives(grid, v);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(d(static_cast<Eigen::Index>(k), 0) == doctest::Approx(2.0 * grid[k]).epsilon(1e-12));
    CHECK(std::abs(d(static_cast<Eigen::Index>(k), 1)) < 1e-12);
  }
}

TEST_CASE("exponential growth is recovered without spurious terms") {
  Dataset data;
  data.state_names = {"x1"};
  Trajectory t;
  t.grid = TimeGrid::uniform(0.0, 0.001, 1001);
  t.values.resize(1001, 1);
  for (std::size_t k = 0; k < 1001; ++k) t.values(static_cast<Eigen::Index>(k), 0) = std::exp(2.0 * t.grid[k]);
  t.observed = {true};
  data.trajectories.push_back(t);
  const RegressionProblem prob = build_regression_problem(data, PolynomialBasis(1, 2));
  CHECK(prob.features.rows() == 1001);
  const StlsqResult r = stlsq(prob, 0.05);
  CHECK(r.coefficients.value(0, 1) == doctest::Approx(2.0).epsilon(1e-4));
  CHECK_FALSE(r.coefficients.active(0, 0));
  CHECK_FALSE(r.coefficients.active(0, 2));
}

TEST_CASE("zero threshold reproduces ordinary least squares") {
  GenerateOptions go;
  go.horizon = 3.0;
  go.dt = 0.01;
  const Dataset data = generate_dataset(make_lv(LvRegime::LimitCycle), go);
  const RegressionProblem prob = build_regression_problem(data, PolynomialBasis(2, 2));
  const StlsqResult r = stlsq(prob, 0.0);
  const Eigen::MatrixXd ls = prob.features.colPivHouseholderQr().solve(prob.targets);
  CHECK((r.coefficients.values() - ls.transpose()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_FALSE(r.rank_deficient);

  const SindySweepResult sweep = stlsq_sweep(prob, {0.001, 0.01, 0.02}, 10, 1);
  CHECK(sweep.residuals.size() == 3);
  CHECK(sweep.validation_residual == *std::min_element(sweep.residuals.begin(), sweep.residuals.end()));
}

TEST_CASE("model comparison") {
  Eigen::MatrixXd truth(1, 3);
  truth << 1.0, 0.0, -2.0;
  const ModelComparison same = compare_models(truth, truth);
  CHECK(same.exact_support());
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.max_relative_error == 0.0);

  Eigen::MatrixXd fit(1, 3);
  fit << 1.1, 0.3, 0.0;
  const ModelComparison c = compare_models(truth, fit);
  CHECK(c.spurious == 1);
  CHECK(c.missed == 1);
  CHECK(c.precision == doctest::Approx(0.5));
  CHECK(c.recall == doctest::Approx(0.5));
  CHECK(c.max_relative_error == doctest::Approx(1.0));
  CHECK(std::isnan(c.relative_errors(0, 1)));
  CHECK(identification_failed(c));

  fit << 1.2, 0.3, -2.0;
  const ModelComparison extra = compare_models(truth, fit);
  CHECK(extra.recall == 1.0);
  CHECK(extra.precision == doctest::Approx(2.0 / 3.0));
  CHECK_FALSE(identification_failed(extra));
  CHECK_THROWS_AS(compare_models(truth, Eigen::MatrixXd::Zero(2, 3)), Error);
}
