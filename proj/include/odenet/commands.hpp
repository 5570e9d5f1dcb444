#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "odenet/config.hpp"
#include "odenet/error.hpp"

namespace odenet {

using LogSink = std::function<void(const std::string&)>;

/// Command-line flags that override the config file.
struct CommandOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
  std::optional<FitMode> mode;
  std::optional<int> threads;
};

void apply_overrides(RunConfig& config, const CommandOverrides& overrides);

/// Each command writes its artifacts under `config.output` and returns a short
/// human-readable summary. Failures are thrown as odenet::Error.
std::string cmd_generate(const RunConfig& config, const LogSink& log = {});
std::string cmd_fit(const RunConfig& config, const LogSink& log = {});
/// Writes whatever was computed before a divergence, then throws
/// Error(Divergence).
std::string cmd_simulate(const RunConfig& config, const LogSink& log = {});
std::string cmd_compare(const RunConfig& config, const LogSink& log = {});
/// Collects `<output>/*/outcome.json` into `<output>/report.md`.
std::string cmd_report(const RunConfig& config, const LogSink& log = {});

/// 0 ok, 1 config/io, 2 training diverged, 3 simulation diverged.
int exit_code_for(ErrorCode code);

/// The dataset a config points at (manifest, bare CSV or generator spec) and
/// the true model when it is known.
struct LoadedData {
  Dataset dataset;
  std::optional<ODEModel> truth;
};
LoadedData load_run_data(const RunConfig& config);

/// True model stored in a manifest, or a bare model JSON.
ODEModel load_truth_model(const std::filesystem::path& path);

}  // namespace odenet
