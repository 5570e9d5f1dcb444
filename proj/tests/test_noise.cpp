#include <cmath>
#include <random>

#include "doctest.h"
#include "odenet/noise.hpp"

using namespace odenet;

TEST_CASE("noise injection scales with the sup norm") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd y(3, 2);
  y << 1, -4, 2, 0, -3, 1;
  CHECK(sup_norm_per_dimension(y) == Eigen::Vector2d(3, 4));
  const NoisyValues same = inject_noise(y, 0.0, rng);
  CHECK(same.values == y);

  const Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(20000, 1, 100.0);
  const NoisyValues noisy = inject_noise(constant, 0.01, rng);
  const Eigen::ArrayXd z = (noisy.values.col(0).array() - 100.0);
  const double mean = z.mean();
  const double sd = std::sqrt((z - mean).square().mean());
  CHECK(std::abs(mean) < 0.03);
  CHECK(sd == doctest::Approx(1.0).epsilon(0.03));
  CHECK((noisy.values - constant - noisy.noise).cwiseAbs().maxCoeff() < 1e-12);

  const NoisyValues partial = inject_noise(y, 0.5, rng, {false, true});
  CHECK(partial.values.col(0) == y.col(0));
  CHECK(partial.values.col(1) != y.col(1));
}

namespace {

NoiseField field_with(const Eigen::MatrixXd& offsets) {
  NoiseField f;
  f.observed_dims = {0};
  f.offsets = {offsets};
  f.scale_reference = Eigen::VectorXd::Ones(1);
  return f;
}

}  // namespace

TEST_CASE("gaussianity report") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.5, 2.0);
  Eigen::MatrixXd e(5000, 1);
  for (Eigen::Index k = 0; k < e.rows(); ++k) e(k, 0) = n(rng);
  const auto reports = noise_gaussianity_report(field_with(e));
  REQUIRE(reports.size() == 1);
  const auto& r = reports[0];
  CHECK(r.samples == 5000);
  CHECK(r.mean == doctest::Approx(0.5).epsilon(0.1));
  CHECK(r.stddev == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::abs(r.excess_kurtosis) < 0.3);
  CHECK(r.bin_centers.size() == 40);
  std::size_t total = 0;
  for (auto c : r.counts) total += c;
  CHECK(total <= 5000);
  CHECK(total > 4990);
  CHECK(noise_report_csv(reports).rfind("dimension,bin_center,count,reference_density\n", 0) == 0);

  CHECK_THROWS_AS(noise_gaussianity_report(field_with(Eigen::MatrixXd::Zero(9, 1))), Error);
  const auto flat = noise_gaussianity_report(field_with(Eigen::MatrixXd::Zero(10, 1)));
  CHECK(flat[0].degenerate);
}

TEST_CASE("noise field layout and correlation") {
  Dataset data;
  data.state_names = {"P", "M"};
  Trajectory t;
  t.grid = TimeGrid::uniform(0.0, 1.0, 4);
  t.values = Eigen::MatrixXd::Ones(4, 2);
  t.observed = {false, true};
  data.trajectories.push_back(t);
  NoiseField f = initialize_noise_field(data, 0.1);
  CHECK(f.observed_dims == std::vector<int>{1});
  CHECK(f.offsets[0].rows() == 4);
  CHECK(f.offsets[0].cols() == 1);
  CHECK(f.column_of(0) == -1);
  CHECK(f.offset(0, 2, 0) == 0.0);

  f.offsets[0] << 1, 2, 3, 4;
  Eigen::MatrixXd ref(4, 2);
  ref << 0, 2, 0, 4, 0, 6, 0, 8;
  CHECK(noise_correlation(f, {ref}, 1) == doctest::Approx(1.0));
  ref.col(1) *= -1.0;
  CHECK(noise_correlation(f, {ref}, 1) == doctest::Approx(-1.0));
}
