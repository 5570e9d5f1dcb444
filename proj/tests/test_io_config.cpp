#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "odenet/config.hpp"
#include "odenet/io.hpp"
#include "odenet/systems.hpp"
#include "test_util.hpp"

using namespace odenet;
namespace fs = std::filesystem;

TEST_CASE("doubles round-trip through CSV") {
  const TimeGrid grid({0.0, 0.1, 1.0 / 3.0});
  Eigen::MatrixXd v(3, 2);
  v << 1.0 / 7.0, -2e-300, std::nextafter(1.0, 2.0), 123456789.123456789, -0.0, 6.02214076e23;
  const std::string text = trajectory_csv(grid, v, {"a", "b"});
  CHECK(text.rfind("t,a,b\n", 0) == 0);
  const CsvTable t = parse_csv(text);
  CHECK(t.header == std::vector<std::string>{"t", "a", "b"});
  REQUIRE(t.rows.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(t.rows[k][0] == grid[k]);
    CHECK(t.rows[k][1] == v(static_cast<Eigen::Index>(k), 0));
    CHECK(t.rows[k][2] == v(static_cast<Eigen::Index>(k), 1));
  }
  CHECK_THROWS_AS(parse_csv("t,a\n0,1\n1\n"), Error);
  CHECK_THROWS_AS(parse_csv("t,a\n0,abc\n"), Error);
}

TEST_CASE("model JSON round-trip keeps mask and ties") {
  CoefficientMatrix theta = actin_physical_structure();
  theta.set_value(1, 1, 0.25);
  const ODEModel m(PolynomialBasis(3, 2), theta, {"P", "M", "m"});
  const ODEModel back = model_from_json(model_to_json(m));
  CHECK(back.theta().values() == m.theta().values());
  CHECK(back.theta().ties().size() == m.theta().ties().size());
  CHECK(back.theta().active_count() == m.theta().active_count());
  CHECK(back.state_names() == m.state_names());
  CHECK(model_to_json(back).dump() == model_to_json(m).dump());
}

TEST_CASE("config schema") {
  const Json ok = Json::parse(R"({
    "seed": 3, "output": "out", "mode": "odenet",
    "dataset": {"generate": {"system": "lv", "regime": "spiral", "noise": 0.01}},
    "basis": {"order": 2},
    "train": {"iterations": 10, "mu": {"start": 0.01, "end": 0.001}, "integrator": {"method": "rk4"}}
  })");
  const RunConfig cfg = parse_run_config(ok, "/base");
  CHECK(cfg.seed == 3);
  CHECK(cfg.output == fs::path("/base/out"));
  CHECK(cfg.generate->regime == LvRegime::Spiral);
  CHECK(cfg.train.mu.start == 0.01);
  CHECK(cfg.train.integrator.method == IntegratorMethod::Rk4);

  Json bad = ok;
  bad["train"]["learning_rat"] = 0.1;
  CHECK_THROWS_AS(parse_run_config(bad), Error);
  bad = ok;
  bad["extra"] = 1;
  CHECK_THROWS_AS(parse_run_config(bad), Error);
  bad = ok;
  bad["train"]["iterations"] = "many";
  CHECK_THROWS_AS(parse_run_config(bad), Error);
  bad = ok;
  bad["mode"] = "magic";
  CHECK_THROWS_AS(parse_run_config(bad), Error);

  const TrainConfig t = parse_train_config(train_config_to_json(cfg.train));
  CHECK(train_config_to_json(t) == train_config_to_json(cfg.train));
}

TEST_CASE("long CSV datasets load") {
  const fs::path dir = test_dir("io-long");
  const TimeGrid grid = TimeGrid::uniform(0.0, 0.01, 3001);
  Eigen::MatrixXd v(3001, 2);
  for (Eigen::Index k = 0; k < 3001; ++k) v.row(k) << std::sin(0.01 * k), std::cos(0.01 * k);
  write_text(dir / "d.csv", trajectory_csv(grid, v, {"x1", "x2"}));
  const Dataset d = load_csv_dataset(dir / "d.csv");
  CHECK(d.trajectories[0].samples() == 3001);
  CHECK(d.trajectories[0].values == v);
  CHECK(d.state_names == std::vector<std::string>{"x1", "x2"});
}
