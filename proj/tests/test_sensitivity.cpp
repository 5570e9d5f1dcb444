#include <cmath>

#include "doctest.h"
#include "odenet/recipes.hpp"
#include "odenet/sensitivity.hpp"
#include "odenet/systems.hpp"

using namespace odenet;

TEST_CASE("closed-form parameter sensitivity of exponential growth") {
  CoefficientMatrix theta(1, 2);
  theta.deactivate(0, 0);
  theta.set_value(0, 1, -1.0);
  const ODEModel model(PolynomialBasis(1, 1), theta);
  IntegratorConfig cfg;
  cfg.atol = cfg.rtol = 1e-10;
  const auto s = integrate_with_sensitivity(model, Eigen::VectorXd::Ones(1), {false}, TimeGrid({0.0, 1.0}), cfg);
  REQUIRE(s.s_theta.size() == 1);
  CHECK(s.s_theta[0].cols() == 1);
  CHECK(std::abs(s.s_theta[0](0, 0) - std::exp(-1.0)) < 1e-5);
  CHECK(s.s_init[0].cols() == 0);
}

TEST_CASE("state output matches plain integration when nothing is learnable") {
  const ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  ODEModel frozen = lc.model;
  for (const auto& p : lc.model.theta().free_parameters()) frozen.theta().deactivate(p.entry.row, p.entry.col);
  IntegratorConfig rk;
  rk.method = IntegratorMethod::Rk4;
  const TimeGrid grid = TimeGrid::uniform(0.0, 0.1, 6);
  const auto s = integrate_with_sensitivity(frozen, Eigen::Vector2d(10, 10), {false, false}, grid, rk);
  CHECK(s.states == integrate(frozen, Eigen::Vector2d(10, 10), grid, rk));

  const auto h = integrate_with_sensitivity(lc.model, Eigen::Vector2d(10, 10), {true, false}, grid, rk);
  CHECK(h.init_dims == std::vector<int>{0});
  CHECK((h.states - integrate(lc.model, Eigen::Vector2d(10, 10), grid, rk)).cwiseAbs().maxCoeff() < 1e-12);
}

namespace {

Dataset lv_data(double noise) {
  GenerateOptions go;
  go.noise = noise;
  go.seed = 3;
  go.horizon = 2.0;
  go.dt = 0.1;
  return generate_dataset(make_lv(LvRegime::LimitCycle), go);
}

}  // namespace

TEST_CASE("perfect fit leaves only the regularizer") {
  const Dataset data = lv_data(0.0);
  const ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  IntegratorConfig cfg;
  cfg.atol = cfg.rtol = 1e-11;
  Batch batch{3, {{0, 0}, {0, 5}, {0, 11}}};
  LossInputs in;
  in.dataset = &data;
  in.model = &lc.model;
  in.integrator = cfg;
  BatchGradient g = loss_and_gradient(batch, in);
  CHECK(g.loss < 1e-12);
  CHECK(g.grad_theta.cwiseAbs().maxCoeff() < 1e-5);
  CHECK(g.labels == 9);

  in.mu = 0.5;
  g = loss_and_gradient(batch, in);
  const Eigen::VectorXd p = lc.model.theta().free_values();
  CHECK(g.loss == doctest::Approx(0.5 * p.cwiseAbs().sum()).epsilon(1e-9));
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    CHECK(g.grad_theta[k] == doctest::Approx(0.5 * (p[k] > 0 ? 1.0 : -1.0)).epsilon(1e-4));
  }
}

TEST_CASE("loss is invariant to piece order and pruning keeps other gradients") {
  const Dataset data = lv_data(0.01);
  ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  CoefficientMatrix theta(2, 6);
  for (const auto& p : theta.free_parameters()) theta.set_value(p.entry.row, p.entry.col, 0.01 * (p.entry.col + 1));
  theta.set_value(0, 1, 1.0);
  theta.set_value(1, 2, -1.0);
  ODEModel model(PolynomialBasis(2, 2), theta);
  IntegratorConfig rk;
  rk.method = IntegratorMethod::Rk4;
  LossInputs in;
  in.dataset = &data;
  in.model = &model;
  in.integrator = rk;
  const BatchGradient a = loss_and_gradient(Batch{2, {{0, 0}, {0, 7}, {0, 3}}}, in);
  const BatchGradient b = loss_and_gradient(Batch{2, {{0, 3}, {0, 0}, {0, 7}}}, in);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));

  // Zero out then prune an entry: surviving gradients are unchanged at fixed θ.
  ODEModel zeroed = model;
  zeroed.theta().set_value(0, 0, 0.0);
  const BatchGradient before = loss_and_gradient(Batch{2, {{0, 0}}}, LossInputs{&data, &zeroed, nullptr, nullptr, 0.0, rk, 1});
  ODEModel pruned = zeroed;
  pruned.theta().deactivate(0, 0);
  const BatchGradient after = loss_and_gradient(Batch{2, {{0, 0}}}, LossInputs{&data, &pruned, nullptr, nullptr, 0.0, rk, 1});
  CHECK(after.grad_theta.size() == before.grad_theta.size() - 1);
  for (Eigen::Index k = 0; k < after.grad_theta.size(); ++k) {
    CHECK(after.grad_theta[k] == doctest::Approx(before.grad_theta[k + 1]).epsilon(1e-12));
  }
}

TEST_CASE("failed pieces get the sentinel loss and no gradient") {
  Dataset data;
  data.state_names = {"x1"};
  Trajectory t;
  t.grid = TimeGrid::uniform(0.0, 1.0, 4);
  t.values = Eigen::MatrixXd::Constant(4, 1, 10.0);
  t.observed = {true};
  data.trajectories.push_back(t);
  CoefficientMatrix theta(1, 3);
  theta.set_value(0, 2, 1.0);
  const ODEModel blowup(PolynomialBasis(1, 2), theta);
  IntegratorConfig rk;
  rk.method = IntegratorMethod::Rk4;
  rk.rk4_substeps = 2;
  const BatchGradient g = loss_and_gradient(Batch{3, {{0, 0}}}, LossInputs{&data, &blowup, nullptr, nullptr, 0.0, rk, 1});
  CHECK(g.failed_pieces == 1);
  CHECK(g.data_loss == kFailedPieceLoss);
  CHECK(g.grad_theta.isZero());
  CHECK(g.failures.size() == 1);
}

TEST_CASE("gradient check on 20 random instances") {
  const GradientCheck g = check_gradients(20, 11, 1e-4, 1e-7);
  CHECK(g.instances == 20);
  CHECK(g.components > 100);
  CHECK(g.failures == 0);
}

TEST_CASE("hidden initial values receive gradient through the coupling") {
  const ReferenceSystem sys = make_actin(ActinModel::Physical, Salt::MgCl2);
  GenerateOptions go;
  go.seed = 1;
  const Dataset data = generate_dataset(sys, go);
  std::vector<Eigen::VectorXd> hidden;
  for (std::size_t k = 0; k < data.trajectories.size(); ++k) hidden.push_back(Eigen::VectorXd::Constant(1, 0.05));
  IntegratorConfig rk;
  rk.method = IntegratorMethod::Rk4;
  LossInputs in{&data, &sys.model, nullptr, &hidden, 0.0, rk, 1};
  const BatchGradient g = loss_and_gradient(Batch{20, {{2, 0}}}, in);
  REQUIRE(g.grad_hidden.count(2) == 1);
  CHECK(std::abs(g.grad_hidden.at(2)[0]) > 0.0);
  CHECK_THROWS_AS(loss_and_gradient(Batch{20, {{2, 1}}}, in), Error);
}
