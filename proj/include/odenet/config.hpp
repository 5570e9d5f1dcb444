#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "odenet/io.hpp"
#include "odenet/systems.hpp"
#include "odenet/train.hpp"

namespace odenet {

/// Which reference system to sample and how.
struct GeneratorSpec {
  std::string system = "lv";                          // lv | lorenz | actin
  LvRegime regime = LvRegime::LimitCycle;
  std::optional<std::array<double, 6>> coefficients;  // lv only; overrides the regime
  ActinModel actin_model = ActinModel::Physical;
  Salt salt = Salt::MgCl2;
  std::vector<std::vector<double>> initial_conditions;  // empty: system defaults
  std::vector<std::optional<double>> conserved_totals;
  double horizon = 0.0;                                 // <= 0: system default
  double dt = 0.0;
  double noise = 0.0;
  double max_internal_step = 0.0;
};

ReferenceSystem make_system(const GeneratorSpec& spec);
GenerateOptions make_generate_options(const GeneratorSpec& spec, std::uint64_t seed);
Json generator_to_json(const GeneratorSpec& spec);
GeneratorSpec generator_from_json(const Json& doc);

enum class FitMode { Odenet, Sindy };
FitMode parse_fit_mode(const std::string& name);
std::string to_string(FitMode mode);

/// Coefficient layout to fit: every basis term free, or one of the actin
/// layouts with its ties.
enum class StructureKind { Full, ActinDataDriven, ActinPhysical };

struct SindySettings {
  std::vector<double> thresholds{0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1};
  int max_rounds = 10;
};

struct SimulateSpec {
  std::filesystem::path model;
  std::vector<double> x0;
  double start = 0.0;
  double dt = 0.01;
  std::size_t count = 0;
  std::vector<double> grid;  // explicit times override start/dt/count
};

struct CompareSpec {
  std::filesystem::path truth;  // manifest or model JSON
  std::filesystem::path model;
};

struct RunConfig {
  std::optional<std::filesystem::path> dataset;  // manifest JSON or bare CSV
  std::optional<GeneratorSpec> generate;
  std::optional<int> basis_dimension;            // default: data dimension
  int basis_order = 2;
  StructureKind structure = StructureKind::Full;
  TrainConfig train;
  FitMode mode = FitMode::Odenet;
  SindySettings sindy;
  std::filesystem::path output = "out";
  std::uint64_t seed = 0;
  std::optional<SimulateSpec> simulate;
  std::optional<CompareSpec> compare;
};

/// Validates against the schema (unknown keys are errors) and resolves
/// relative paths against `base_dir`.
RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// TrainConfig and IntegratorConfig sections on their own.
TrainConfig parse_train_config(const Json& doc, TrainConfig base = {});
IntegratorConfig parse_integrator_config(const Json& doc, IntegratorConfig base = {});
Json train_config_to_json(const TrainConfig& config);

}  // namespace odenet
