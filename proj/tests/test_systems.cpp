#include <cmath>

#include "doctest.h"
#include "odenet/integrate.hpp"
#include "odenet/systems.hpp"

using namespace odenet;

TEST_CASE("LV coefficients and fixed points") {
  const ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  const auto& th = lc.model.theta();
  CHECK(th.value(0, 1) == 1.0);
  CHECK(th.value(0, 4) == -0.05);
  CHECK(th.value(1, 2) == -1.0);
  CHECK(th.value(1, 4) == 0.03);
  CHECK(th.active_count() == 4);

  bool found_center = false;
  for (const FixedPoint& fp : lv_fixed_points(lc)) {
    if (fp.point.isApprox(Eigen::Vector2d(1.0 / 0.03, 1.0 / 0.05))) {
      found_center = true;
      CHECK(fp.stability == Stability::Center);
    }
  }
  CHECK(found_center);

  bool found_node = false;
  for (const FixedPoint& fp : lv_fixed_points(make_lv(LvRegime::OverDamped))) {
    if (fp.point.isApprox(Eigen::Vector2d(1.0, 0.5))) {
      found_node = true;
      CHECK((fp.stability == Stability::StableNode || fp.stability == Stability::StableSpiral));
      CHECK(fp.eigenvalues[0].real() < 0.0);
      CHECK(fp.eigenvalues[1].real() < 0.0);
    }
  }
  CHECK(found_node);
}

TEST_CASE("Lorenz layout") {
  const ReferenceSystem lz = make_lorenz();
  CHECK(lz.model.theta().active_count() == 7);
  CHECK(30 - lz.model.theta().active_count() == 23);
  CHECK(lz.model.theta().value(2, 3) == doctest::Approx(-8.0 / 3.0));
  const Eigen::VectorXd f = lz.model.rhs(Eigen::Vector3d(1, 2, 3));
  CHECK(f[0] == doctest::Approx(10.0));
  CHECK(f[1] == doctest::Approx(28.0 - 2.0 - 3.0));
  CHECK(f[2] == doctest::Approx(2.0 - 8.0));
}

TEST_CASE("generated data follows its settings") {
  GenerateOptions go;
  go.noise = 0.01;
  go.seed = 4;
  const ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  const Dataset a = generate_dataset(lc, go);
  const Dataset b = generate_dataset(lc, go);
  REQUIRE(a.trajectories.size() == 1);
  const Trajectory& t = a.trajectories[0];
  CHECK(t.samples() == static_cast<std::size_t>(std::llround(lc.horizon / lc.dt)) + 1);
  CHECK(t.values == b.trajectories[0].values);
  CHECK((t.values - t.clean - t.injected_noise).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((t.clean.array() > 0.0).all());

  go.seed = 5;
  CHECK(generate_dataset(lc, go).trajectories[0].values != t.values);

  go.grid = {0.0, 0.5, 0.6, 2.0};
  CHECK(generate_dataset(lc, go).trajectories[0].samples() == 4);
}

TEST_CASE("actin systems") {
  const auto alpha = actin_coefficients(ActinModel::Physical, Salt::MgCl2);
  REQUIRE(alpha.size() == 11);
  const ReferenceSystem sys = make_actin(ActinModel::Physical, Salt::MgCl2);
  CHECK(sys.observed == std::vector<bool>{false, true, true});
  CHECK(actin_alphas(ActinModel::Physical, sys.model.theta()) == alpha);
  CHECK(sys.initial_conditions.size() == actin_concentrations(Salt::MgCl2).size());

  const Dataset data = generate_dataset(sys, GenerateOptions{});
  for (const Trajectory& t : data.trajectories) {
    CHECK(t.values.col(0).isZero());
    CHECK((t.clean.array() >= 0.0).all());
    const Eigen::VectorXd total = t.clean.col(1) + t.clean.col(2);
    CHECK((total.array() - *t.conserved_total).abs().maxCoeff() < 1e-9 * *t.conserved_total);
  }

  const CoefficientMatrix guess = actin_physical_initial_guess(data, 2.0);
  const auto a = actin_alphas(ActinModel::Physical, guess);
  CHECK(a[9] == 2.0);
  CHECK(a[10] < 0.0);

  const ReferenceSystem dd = make_actin(ActinModel::DataDriven, Salt::KCl);
  const Eigen::VectorXd f = dd.model.rhs(Eigen::Vector2d(0.3, 1.7));
  CHECK(f[0] + f[1] == 0.0);
  CHECK_THROWS_AS(parse_salt("NaCl"), Error);
}

TEST_CASE("far-from-attractor Lorenz start diverges") {
  const ReferenceSystem lz = make_lorenz();
  IntegratorConfig rk;
  rk.method = IntegratorMethod::Rk4;
  rk.rk4_substeps = 1;
  CHECK_THROWS_AS(integrate(lz.model, Eigen::Vector3d(1e6, 1e6, 1e6), TimeGrid::uniform(0.0, 0.1, 50), rk),
                  IntegrationError);
}
