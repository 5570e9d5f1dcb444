#include <cmath>
#include <random>

#include "doctest.h"
#include "odenet/error.hpp"
#include "odenet/model.hpp"
#include "odenet/systems.hpp"

using namespace odenet;

TEST_CASE("rhs at known fixed points") {
  const ReferenceSystem od = make_lv(LvRegime::OverDamped);
  CHECK(od.model.rhs(Eigen::Vector2d(1.0, 0.5)).norm() < 1e-15);

  const ReferenceSystem lorenz = make_lorenz();
  const double a = 6.0 * std::sqrt(2.0);
  CHECK(lorenz.model.rhs(Eigen::Vector3d(a, a, 27.0)).norm() < 1e-12);

  ODEModel zero(PolynomialBasis(2, 2), CoefficientMatrix(2, 6));
  CHECK(zero.rhs(Eigen::Vector2d(3, -4)).isZero());
  CHECK(zero.rhs_jacobian_state(Eigen::Vector2d(3, -4)).isZero());
}

TEST_CASE("LV state jacobian matches the closed form") {
  const ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  Eigen::MatrixXd J = lc.model.rhs_jacobian_state(Eigen::Vector2d(100.0 / 3.0, 20.0));
  CHECK(std::abs(J(0, 0)) < 1e-14);

  // Any LV coefficients: (1,1)=C11+C12 x2+2C13 x1, (1,2)=C12 x1, (2,1)=C22 x2, (2,2)=C21+C22 x1+2C23 x2
  const std::array<double, 6> c{2.0, -1.1, -0.1, -1.0, -0.1, 0.9};
  const ReferenceSystem sp = make_lv(c);
  const double x1 = 0.7, x2 = 1.3;
  J = sp.model.rhs_jacobian_state(Eigen::Vector2d(x1, x2));
  CHECK(J(0, 0) == doctest::Approx(c[0] + c[1] * x2 + 2 * c[2] * x1));
  CHECK(J(0, 1) == doctest::Approx(c[1] * x1));
  CHECK(J(1, 0) == doctest::Approx(c[4] * x2));
  CHECK(J(1, 1) == doctest::Approx(c[3] + c[4] * x1 + 2 * c[5] * x2));
}

TEST_CASE("state jacobian against finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 3;
    PolynomialBasis basis(d, 2);
    Eigen::MatrixXd values(d, static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index k = 0; k < values.size(); ++k) values.data()[k] = u(rng);
    ODEModel model(basis, CoefficientMatrix(values));
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = 2 * u(rng);
    const Eigen::MatrixXd J = model.rhs_jacobian_state(x);
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd up = x, down = x;
      up[i] += 1e-6;
      down[i] -= 1e-6;
      const Eigen::VectorXd fd = (model.rhs(up) - model.rhs(down)) / 2e-6;
      for (int r = 0; r < d; ++r) CHECK(std::abs(J(r, i) - fd[r]) <= 1e-6 * std::max(1.0, std::abs(fd[r])));
    }
  }
}

TEST_CASE("theta gradient structure, including ties") {
  PolynomialBasis basis(2, 2);
  CoefficientMatrix theta(2, 6);
  ODEModel model(basis, theta);
  const auto params = model.theta().free_parameters();
  REQUIRE(params.size() == 12);
  const Eigen::MatrixXd g = model.rhs_gradient_theta(Eigen::Vector2d(2, 3), params);
  // Parameters 0..5 drive row 0, 6..11 row 1.
  CHECK(g.row(0).head(6) == (Eigen::RowVectorXd(6) << 1, 2, 3, 4, 6, 9).finished());
  CHECK(g.row(1).head(6).isZero());
  CHECK(g.row(0).tail(6).isZero());

  CoefficientMatrix tied(2, 6);
  for (int j = 0; j < 6; ++j) tied.add_tie(Entry{1, j}, Entry{0, j}, -1.0);
  ODEModel conserving(basis, tied);
  const auto p2 = conserving.theta().free_parameters();
  REQUIRE(p2.size() == 6);
  const Eigen::MatrixXd g2 = conserving.rhs_gradient_theta(Eigen::Vector2d(2, 3), p2);
  CHECK(g2.row(1) == -g2.row(0));
}

TEST_CASE("thresholding is strict, permanent and follows ties") {
  Eigen::MatrixXd v(2, 2);
  v << 1.5, 0.0005, -1.0, 0.002;
  CoefficientMatrix theta(v);
  auto pruned = theta.apply_threshold(0.001);
  REQUIRE(pruned.size() == 1);
  CHECK(pruned[0] == Entry{0, 1});
  CHECK(theta.value(0, 1) == 0.0);
  CHECK_FALSE(theta.active(0, 1));
  CHECK(theta.apply_threshold(1e-9).empty());

  theta.set_value(0, 1, 5.0);  // ignored: inactive
  CHECK(theta.value(0, 1) == 0.0);

  Eigen::MatrixXd w(1, 1);
  w << 0.25;
  CoefficientMatrix edge(w);
  CHECK(edge.apply_threshold(0.25).empty());

  CoefficientMatrix tied(2, 2);
  tied.add_tie(Entry{1, 0}, Entry{0, 0}, 2.0);
  tied.set_value(0, 0, 0.3);
  CHECK(tied.value(1, 0) == 0.6);
  CHECK_THROWS_AS(tied.set_value(1, 0, 1.0), Error);
  CHECK_THROWS_AS(tied.add_tie(Entry{0, 0}, Entry{1, 0}, 1.0), Error);
  tied.deactivate(0, 0);
  CHECK_FALSE(tied.active(1, 0));
  CHECK(tied.value(1, 0) == 0.0);
}

TEST_CASE("rendered equations") {
  ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  const auto eqs = lc.model.render_equations(3);
  REQUIRE(eqs.size() == 2);
  CHECK(eqs[0] == "dx1/dt = 1*x1 - 0.05*x1*x2");
  CHECK(eqs[1] == "dx2/dt = -1*x2 + 0.03*x1*x2");
  CHECK(lc.model.theta().value(0, 4) == -0.05);

  CoefficientMatrix theta(1, 2);
  theta.deactivate(0, 0);
  theta.deactivate(0, 1);
  CHECK(ODEModel(PolynomialBasis(1, 1), theta).render_equations()[0] == "dx1/dt = 0");
}
