#include <filesystem>

#include "doctest.h"
#include "odenet/commands.hpp"
#include "odenet/systems.hpp"
#include "test_util.hpp"

using namespace odenet;
namespace fs = std::filesystem;

namespace {

RunConfig config(const fs::path& dir, const std::string& text) { return parse_run_config(Json::parse(text), dir); }

}  // namespace

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorCode::Config) == 1);
  CHECK(exit_code_for(ErrorCode::Io) == 1);
  CHECK(exit_code_for(ErrorCode::TrainingDiverged) == 2);
  CHECK(exit_code_for(ErrorCode::Divergence) == 3);
  CHECK(exit_code_for(ErrorCode::StepBudget) == 3);
}

TEST_CASE("generate is reproducible and hides unobserved columns") {
  const fs::path dir = test_dir("cmd-generate");
  const std::string text = R"({"seed": 4, "output": "a",
    "dataset": {"generate": {"system": "actin", "model": "physical", "salt": "MgCl2", "noise": 0.01}}})";
  cmd_generate(config(dir, text));
  RunConfig again = config(dir, text);
  again.output = dir / "b";
  cmd_generate(again);
  for (const char* f : {"manifest.json", "traj_000.csv", "traj_006.csv"}) {
    CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));
  }
  CHECK(read_text(dir / "a" / "traj_000.csv").rfind("t,M,m\n", 0) == 0);
  const Json manifest = read_json(dir / "a" / "manifest.json");
  CHECK(manifest.at("hidden") == Json::array({"P"}));

  const Dataset d = load_dataset(dir / "a" / "manifest.json");
  CHECK(d.trajectories.size() == 7);
  CHECK(d.has_hidden());
  CHECK(d.trajectories[0].values.col(0).isZero());
  CHECK(d.trajectories[0].conserved_total.has_value());
}

TEST_CASE("simulate, compare and report") {
  const fs::path dir = test_dir("cmd-sim");
  write_json(dir / "zero.json", model_to_json(ODEModel(PolynomialBasis(2, 2), CoefficientMatrix(2, 6))));
  cmd_simulate(config(dir, R"({"output": "z", "simulate": {"model": "zero.json", "x0": [1.5, 2], "dt": 0.1, "count": 5}})"));
  const CsvTable z = parse_csv(read_text(dir / "z" / "simulation.csv"));
  REQUIRE(z.rows.size() == 5);
  for (const auto& row : z.rows) CHECK((row[1] == 1.5 && row[2] == 2.0));

  CoefficientMatrix blow(1, 3);
  blow.set_value(0, 2, 1.0);
  write_json(dir / "blow.json", model_to_json(ODEModel(PolynomialBasis(1, 2), blow)));
  try {
    cmd_simulate(config(dir, R"({"output": "b", "simulate": {"model": "blow.json", "x0": [1], "dt": 0.25, "count": 9}})"));
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(exit_code_for(e.code()) == 3);
  }
  const CsvTable partial = parse_csv(read_text(dir / "b" / "simulation.csv"));
  CHECK(partial.rows.size() >= 2);
  CHECK(partial.rows.size() < 9);

  const ReferenceSystem lc = make_lv(LvRegime::LimitCycle);
  write_json(dir / "truth.json", model_to_json(lc.model));
  cmd_compare(config(dir, R"({"output": "c", "compare": {"truth": "truth.json", "model": "truth.json"}})"));
  const Json same = read_json(dir / "c" / "comparison.json");
  CHECK(same.at("max_relative_error").get<double>() == 0.0);

  CoefficientMatrix extra = lc.model.theta();
  CoefficientMatrix fitted(lc.model.theta().values());
  fitted.set_value(0, 3, 0.2);
  write_json(dir / "extra.json", model_to_json(ODEModel(PolynomialBasis(2, 2), fitted)));
  const std::string table =
      cmd_compare(config(dir, R"({"output": "d", "compare": {"truth": "truth.json", "model": "extra.json"}})"));
  CHECK(table.find("WARNING") != std::string::npos);
  CHECK(table.find("identification FAILED") == std::string::npos);

  CHECK_THROWS_AS(cmd_compare(config(dir, R"({"output": "e", "compare": {"truth": "truth.json", "model": "blow.json"}})")),
                  Error);

  const fs::path runs = dir / "runs";
  fs::create_directories(runs / "r1");
  write_json(runs / "r1" / "outcome.json",
             Json::parse(R"({"id": "r1", "passed": true, "cases": [{"name": "c", "passed": true, "detail": "fine"}]})"));
  RunConfig rep;
  rep.output = runs;
  CHECK(cmd_report(rep).rfind("1/1", 0) == 0);
  CHECK(read_text(runs / "report.md").find("| r1 | PASS | c | fine |") != std::string::npos);
}

TEST_CASE("fit writes its artifacts") {
  const fs::path dir = test_dir("cmd-fit");
  const RunConfig cfg = config(dir, R"({"seed": 1, "output": "fit",
    "dataset": {"generate": {"system": "lv", "regime": "limit_cycle", "noise": 0.01, "horizon": 5}},
    "train": {"iterations": 50, "batch_size": 5, "segment_length": 3, "integrator": {"method": "rk4", "rk4_substeps": 2}}})");
  cmd_fit(cfg);
  for (const char* f : {"model.json", "equations.txt", "fit_summary.json", "train_log.csv", "fit_state.json"}) {
    CHECK(fs::exists(dir / "fit" / f));
  }
  const Json summary = read_json(dir / "fit" / "fit_summary.json");
  CHECK(summary.at("iterations_run") == 50);
  CHECK(summary.contains("comparison"));

  RunConfig sindy = cfg;
  sindy.mode = FitMode::Sindy;
  sindy.output = dir / "sindy";
  cmd_fit(sindy);
  CHECK(fs::exists(dir / "sindy" / "sindy_sweep.csv"));
}
