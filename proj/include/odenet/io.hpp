#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "odenet/data.hpp"
#include "odenet/model.hpp"
#include "odenet/noise.hpp"
#include "odenet/train.hpp"

namespace odenet {

using Json = nlohmann::ordered_json;

/// Shortest text that reads back to the same double ("%.17g").
std::string format_double(double value);

/// CSV with header `t,<names...>`; one row per sample, LF line endings.
std::string trajectory_csv(const TimeGrid& grid, const Eigen::MatrixXd& values,
                           const std::vector<std::string>& column_names);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable parse_csv(const std::string& text);

Json model_to_json(const ODEModel& model);
ODEModel model_from_json(const Json& doc);

/// Noise offsets and hidden initial values that go next to the model JSON.
Json sidecar_to_json(const FittedModel& fitted);
void sidecar_from_json(const Json& doc, FittedModel& fitted);

std::string training_log_csv(const std::vector<LogRecord>& log);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& doc);

/// Loads the trajectories listed in a manifest written by `generate`.
/// Hidden columns are zero-filled; conserved totals come from the manifest.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// A bare CSV (`t,x1,...`) as a one-trajectory, fully observed dataset.
Dataset load_csv_dataset(const std::filesystem::path& csv_path);

}  // namespace odenet
