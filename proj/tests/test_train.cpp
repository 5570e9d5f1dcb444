#include <cmath>
#include <random>

#include "doctest.h"
#include "odenet/systems.hpp"
#include "odenet/train.hpp"

using namespace odenet;

TEST_CASE("log-linear schedules hit both endpoints") {
  const Schedule s{1e-3, 1e-5};
  CHECK(s.at(0, 101) == doctest::Approx(1e-3));
  CHECK(s.at(100, 101) == doctest::Approx(1e-5));
  CHECK(s.at(50, 101) == doctest::Approx(1e-4));
  CHECK(Schedule{2.0, 2.0}.at(7, 10) == 2.0);
}

TEST_CASE("batches stay inside their trajectories") {
  GenerateOptions go;
  go.initial_conditions = {Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 1)};
  go.horizon = 1.0;
  go.dt = 0.1;
  const Dataset data = generate_dataset(make_lv(LvRegime::OverDamped), go);
  std::mt19937_64 rng(5);
  const Batch b = sample_batch(data, 200, 4, rng);
  CHECK(b.pieces.size() == 200);
  CHECK(b.segment_length == 4);
  bool saw_last = false;
  for (const auto& p : b.pieces) {
    CHECK(p.trajectory < 2);
    CHECK(p.start + 4 <= 10);
    saw_last = saw_last || p.start == 6;
  }
  CHECK(saw_last);
  CHECK_THROWS_AS(sample_batch(data, 1, 11, rng), Error);

  const Dataset actin = generate_dataset(make_actin(ActinModel::Physical, Salt::MgCl2), GenerateOptions{});
  for (const auto& p : sample_batch(actin, 50, 20, rng).pieces) CHECK(p.start == 0);
}

TEST_CASE("first Adam step moves each entry by about the learning rate") {
  Eigen::VectorXd p = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Eigen::VectorXd g = Eigen::Vector3d(3.0, -0.01, 0.0);
  AdamState state(3);
  AdamSettings s;
  s.learning_rate = 0.1;
  adam_update(p, g, state, s);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(-1.9).epsilon(1e-5));
  CHECK(p[2] == 0.5);

  Eigen::VectorXd q = Eigen::Vector2d(0.0, 0.0);
  AdamState masked(2);
  adam_update(q, Eigen::Vector2d(1.0, 1.0), masked, s, {false, true});
  CHECK(q[0] == 0.0);
  CHECK(q[1] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(masked.steps == std::vector<std::uint64_t>{0, 1});
}

TEST_CASE("initialization strategies") {
  GenerateOptions go;
  go.seed = 2;
  const ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  const Dataset data = generate_dataset(lc, go);
  const PolynomialBasis basis(2, 2);
  const CoefficientMatrix full(2, 6);
  std::mt19937_64 rng(9);

  const CoefficientMatrix r = initialize_theta(data, basis, full, InitStrategy::RandomSmall, rng);
  CHECK(r.values().cwiseAbs().maxCoeff() <= 0.1);
  CHECK(r.values().cwiseAbs().minCoeff() > 0.0);

  const CoefficientMatrix w = initialize_theta(data, basis, full, InitStrategy::RegressionWarmStart, rng);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double truth = lc.model.theta().value(i, j);
      if (truth != 0.0) CHECK(std::abs(w.value(i, j) - truth) <= 0.1 * std::abs(truth));
    }
  }

  CoefficientMatrix given(2, 6);
  given.set_value(1, 3, 0.25);
  CHECK(initialize_theta(data, basis, given, InitStrategy::FromStructure, rng).values() == given.values());

  const Dataset actin = generate_dataset(make_actin(ActinModel::Physical, Salt::MgCl2), GenerateOptions{});
  std::string warning;
  initialize_theta(actin, PolynomialBasis(3, 2), actin_physical_structure(), InitStrategy::RegressionWarmStart, rng,
                   &warning);
  CHECK_FALSE(warning.empty());
}

TEST_CASE("hidden filament estimate") {
  Trajectory t;
  t.grid = TimeGrid({0.0, 0.1});
  t.values = Eigen::MatrixXd(2, 3);
  // M rises by 0.001 over 0.1 with m = 1 and elongation 1: P = 0.01.
  t.values << 0.0, 0.0, 1.0, 0.0, 0.001, 1.0;
  t.observed = {false, true, true};
  t.conserved_total = 1.0;
  CHECK(estimate_hidden_initial(t, 1, 1.0) == doctest::Approx(0.01));
  t.values(1, 1) = -0.5;
  CHECK(estimate_hidden_initial(t, 1, 1.0) == 1e-6);
  t.conserved_total.reset();
  CHECK_THROWS_AS(estimate_hidden_initial(t, 1, 1.0), Error);
}

namespace {

TrainConfig short_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.iterations = 300;
  cfg.batch_size = 10;
  cfg.segment_length = 3;
  cfg.threshold_period = 50;
  cfg.seed = seed;
  cfg.integrator.method = IntegratorMethod::Rk4;
  cfg.integrator.rk4_substeps = 4;
  return cfg;
}

}  // namespace

TEST_CASE("a zero system is pruned away") {
  Dataset data;
  data.state_names = {"x1", "x2"};
  for (int k = 0; k < 2; ++k) {
    Trajectory t;
    t.grid = TimeGrid::uniform(0.0, 0.1, 30);
    t.values = Eigen::MatrixXd::Constant(30, 2, 1.0 + k);
    t.observed = {true, true};
    data.trajectories.push_back(t);
  }
  TrainConfig cfg = short_config(4);
  cfg.mu = {1e-2, 1e-2};
  cfg.gamma = {0.05, 0.05};
  const FittedModel fit = train(data, PolynomialBasis(2, 2), CoefficientMatrix(2, 6), cfg);
  CHECK(fit.model.theta().active_count() == 0);
  CHECK_FALSE(fit.prune_events.empty());
}

TEST_CASE("training is deterministic for a fixed seed") {
  GenerateOptions go;
  go.seed = 1;
  go.noise = 0.01;
  go.horizon = 5.0;
  const Dataset data = generate_dataset(make_lv(LvRegime::LimitCycle), go);
  const FittedModel a = train(data, PolynomialBasis(2, 2), CoefficientMatrix(2, 6), short_config(7));
  const FittedModel b = train(data, PolynomialBasis(2, 2), CoefficientMatrix(2, 6), short_config(7));
  CHECK(a.model.theta().values() == b.model.theta().values());
  CHECK(a.loss_history == b.loss_history);
  const FittedModel c = train(data, PolynomialBasis(2, 2), CoefficientMatrix(2, 6), short_config(8));
  CHECK(c.loss_history != a.loss_history);
  CHECK(a.iterations_run == 300);
  CHECK(std::isfinite(per_sample_loss(data, a, short_config(7).integrator, 3)));
}

TEST_CASE("invalid training settings are rejected") {
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.mu = {-1.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
}
