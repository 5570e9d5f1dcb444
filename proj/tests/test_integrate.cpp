#include <cmath>

#include "doctest.h"
#include "odenet/integrate.hpp"
#include "odenet/recipes.hpp"
#include "odenet/systems.hpp"

using namespace odenet;

namespace {

ODEModel decay() {
  CoefficientMatrix theta(1, 2);
  theta.set_value(0, 1, -1.0);
  return ODEModel(PolynomialBasis(1, 1), theta);
}

IntegratorConfig tight() {
  IntegratorConfig cfg;
  cfg.atol = cfg.rtol = 1e-9;
  return cfg;
}

}  // namespace

TEST_CASE("time grids") {
  CHECK_THROWS_AS(TimeGrid({0.0, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(TimeGrid({0.0}), Error);
  CHECK_THROWS_AS(TimeGrid({0.0, NAN}), Error);
  const TimeGrid g = TimeGrid::uniform(0.0, 0.1, 11);
  CHECK(g.size() == 11);
  CHECK(g.slice(2, 3).front() == g[2]);
}

TEST_CASE("dopri5 on exponential decay") {
  const Eigen::MatrixXd x = integrate(decay(), Eigen::VectorXd::Ones(1), TimeGrid({0.0, 1.0}), tight());
  CHECK(x.rows() == 1);
  CHECK(std::abs(x(0, 0) - std::exp(-1.0)) < 1e-6);
  CHECK(dopri5_max_error(1e-9) < 1e-7);
}

TEST_CASE("rk4 single step and order") {
  auto f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  const Eigen::VectorXd next = rk4_step(f, Eigen::VectorXd::Ones(1), 0.0, 0.1);
  // 1 - h + h^2/2 - h^3/6 + h^4/24
  CHECK(next[0] == doctest::Approx(0.9048375).epsilon(1e-12));
  auto zero = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(Eigen::VectorXd::Zero(x.size())); };
  CHECK(rk4_step(zero, Eigen::Vector2d(3, 4), 0.0, 0.5) == Eigen::VectorXd(Eigen::Vector2d(3, 4)));

  const double order = rk4_observed_order({0.1, 0.05, 0.025, 0.0125});
  CHECK(order >= 3.8);
  CHECK(order <= 4.2);
}

TEST_CASE("dopri5 step controller") {
  auto zero = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(Eigen::VectorXd::Zero(x.size())); };
  const Dopri5Step s = dopri5_step(zero, Eigen::VectorXd::Ones(2), 0.0, 0.1, 1e-6, 1e-6);
  CHECK(s.error_norm == 0.0);
  CHECK(s.accepted);
  CHECK(dopri5_next_step(1.0, 32.0) == doctest::Approx(0.45));

  auto f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  const Dopri5Step d = dopri5_step(f, Eigen::VectorXd::Ones(1), 0.0, 0.05, 1e-8, 1e-8);
  CHECK(d.accepted);
  CHECK(std::abs(d.state[0] - std::exp(-0.05)) < 1e-8);
}

TEST_CASE("equilibria and zero models stay put") {
  const ReferenceSystem lorenz = make_lorenz();
  const double a = 6.0 * std::sqrt(2.0);
  const Eigen::Vector3d x0(a, a, 27.0);
  const Eigen::MatrixXd x = integrate(lorenz.model, x0, TimeGrid::uniform(0.0, 0.1, 11), tight());
  for (Eigen::Index k = 0; k < x.rows(); ++k) CHECK((x.row(k).transpose() - x0).norm() < 1e-8);

  const ODEModel zero(PolynomialBasis(2, 2), CoefficientMatrix(2, 6));
  for (IntegratorMethod m : {IntegratorMethod::Rk4, IntegratorMethod::Dopri5}) {
    IntegratorConfig cfg;
    cfg.method = m;
    const Eigen::MatrixXd z = integrate(zero, Eigen::Vector2d(1.5, -2), TimeGrid({0.0, 0.3, 0.35, 2.0}), cfg);
    for (Eigen::Index k = 0; k < z.rows(); ++k) CHECK(z.row(k) == Eigen::RowVector2d(1.5, -2));
  }
}

TEST_CASE("dopri5 agrees with fine RK4 on the limit cycle") {
  const ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  const TimeGrid grid = TimeGrid::uniform(0.0, 0.5, 21);
  IntegratorConfig rk;
  rk.method = IntegratorMethod::Rk4;
  rk.rk4_substeps = 500;
  const Eigen::MatrixXd a = integrate(lc.model, Eigen::Vector2d(10, 10), grid, tight());
  const Eigen::MatrixXd b = integrate(lc.model, Eigen::Vector2d(10, 10), grid, rk);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6 * 100);
  CHECK(((a - b).cwiseAbs().array() / b.cwiseAbs().array()).maxCoeff() < 1e-7);
}

TEST_CASE("irregular grids land exactly and runs are deterministic") {
  const ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  const TimeGrid grid({0.0, 0.013, 0.5, 0.51, 1.7});
  const Eigen::MatrixXd a = integrate(lc.model, Eigen::Vector2d(10, 10), grid, IntegratorConfig{});
  const Eigen::MatrixXd b = integrate(lc.model, Eigen::Vector2d(10, 10), grid, IntegratorConfig{});
  CHECK(a.rows() == 4);
  CHECK(a == b);
  // Restarting from an output point reproduces the tail (solver lands on grid times).
  const Eigen::MatrixXd tail = integrate(lc.model, Eigen::Vector2d(10, 10), TimeGrid({0.0, 0.013}), IntegratorConfig{});
  CHECK(tail.row(0) == a.row(0));
}

TEST_CASE("failures are reported with their kind") {
  CoefficientMatrix theta(1, 3);
  theta.set_value(0, 2, 1.0);  // dx/dt = x^2 blows up at t = 1/x0
  const ODEModel blowup(PolynomialBasis(1, 2), theta);
  IntegratorConfig rk;
  rk.method = IntegratorMethod::Rk4;
  CHECK_THROWS_AS(integrate(blowup, Eigen::VectorXd::Constant(1, 10.0), TimeGrid::uniform(0, 0.5, 5), rk),
                  IntegrationError);
  IntegratorConfig dp;
  dp.max_steps = 20;
  try {
    integrate(blowup, Eigen::VectorXd::Constant(1, 10.0), TimeGrid::uniform(0, 0.5, 5), dp);
    FAIL("expected failure");
  } catch (const IntegrationError& e) {
    CHECK((e.code() == ErrorCode::StepBudget || e.code() == ErrorCode::Stiffness || e.code() == ErrorCode::Divergence));
    CHECK(e.time() <= 0.1);
  }
  const PartialTrajectory p = integrate_partial(blowup, Eigen::VectorXd::Constant(1, 1.0), TimeGrid::uniform(0, 0.25, 9), dp);
  CHECK(p.failed);
  CHECK(p.completed >= 2);
  CHECK(p.completed < 8);
}
