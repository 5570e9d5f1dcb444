#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "odenet/basis.hpp"
#include "odenet/error.hpp"

using namespace odenet;

namespace {

// Brute force: every exponent tuple with entries in [0, p] and sum <= p.
std::size_t enumerate_terms(int d, int p) {
  std::size_t count = 0;
  std::vector<int> e(static_cast<std::size_t>(d), 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == d) {
      ++count;
      return;
    }
    for (int k = 0; k <= left; ++k) rec(i + 1, left - k);
  };
  rec(0, p);
  return count;
}

}  // namespace

TEST_CASE("term counts match a brute-force enumeration") {
  for (int d = 1; d <= 4; ++d) {
    for (int p = 0; p <= 5; ++p) {
      PolynomialBasis b(d, p);
      CHECK(b.size() == enumerate_terms(d, p));
      CHECK(b.size() == basis_size(d, p));
    }
  }
  CHECK(PolynomialBasis(2, 2).size() == 6);
  CHECK(PolynomialBasis(3, 2).size() == 10);
  CHECK(PolynomialBasis(5, 0).size() == 1);
}

TEST_CASE("zero dimension is rejected") {
  try {
    PolynomialBasis b(0, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidDimension);
  }
}

TEST_CASE("graded-lex order and labels") {
  PolynomialBasis b(2, 2);
  const std::vector<std::string> want = {"1", "x1", "x2", "x1^2", "x1*x2", "x2^2"};
  for (std::size_t j = 0; j < want.size(); ++j) CHECK(b.term_label(j) == want[j]);
  CHECK(PolynomialBasis(3, 2).term_label(3) == "x3");
  CHECK(b.term_label(4, {"P", "M"}) == "P*M");
  CHECK_THROWS_AS(b.term_label(6), Error);
  CHECK(PolynomialBasis(3, 3).terms() == PolynomialBasis(3, 3).terms());
}

TEST_CASE("evaluation") {
  PolynomialBasis b(2, 2);
  Eigen::VectorXd v = b.evaluate(Eigen::Vector2d(0, 0));
  CHECK(v == (Eigen::VectorXd(6) << 1, 0, 0, 0, 0, 0).finished());
  v = b.evaluate(Eigen::Vector2d(2, 3));
  CHECK(v == (Eigen::VectorXd(6) << 1, 2, 3, 4, 6, 9).finished());
  v = PolynomialBasis(1, 3).evaluate(Eigen::VectorXd::Constant(1, -1.0));
  CHECK(v == (Eigen::VectorXd(4) << 1, -1, 1, -1).finished());
  const double x = 1.7;
  v = PolynomialBasis(1, 5).evaluate(Eigen::VectorXd::Constant(1, x));
  double power = 1.0;
  for (int j = 0; j <= 5; ++j) {
    CHECK(v[j] == doctest::Approx(power).epsilon(1e-15));
    power *= x;
  }
  CHECK_THROWS_AS(b.evaluate(Eigen::Vector2d(NAN, 1)), Error);
}

TEST_CASE("jacobian against central differences") {
  PolynomialBasis b(2, 2);
  Eigen::MatrixXd J = b.jacobian(Eigen::Vector2d(2, 3));
  CHECK(J(4, 0) == 3.0);
  CHECK(J(4, 1) == 2.0);
  CHECK(J.row(0).isZero());

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int d = 1; d <= 3; ++d) {
    PolynomialBasis basis(d, 3);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd x(d);
      for (int i = 0; i < d; ++i) x[i] = u(rng);
      const Eigen::MatrixXd jac = basis.jacobian(x);
      for (int i = 0; i < d; ++i) {
        const double h = 1e-6;
        Eigen::VectorXd up = x, down = x;
        up[i] += h;
        down[i] -= h;
        const Eigen::VectorXd fd = (basis.evaluate(up) - basis.evaluate(down)) / (2 * h);
        for (Eigen::Index j = 0; j < fd.size(); ++j) {
          CHECK(std::abs(jac(j, i) - fd[j]) <= 1e-6 * std::max(1.0, std::abs(fd[j])));
        }
      }
    }
  }
}
