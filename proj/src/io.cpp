#include "odenet/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "odenet/error.hpp"

namespace odenet {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string trajectory_csv(const TimeGrid& grid, const Eigen::MatrixXd& values,
                           const std::vector<std::string>& column_names) {
  if (static_cast<std::size_t>(values.rows()) != grid.size() ||
      static_cast<std::size_t>(values.cols()) != column_names.size()) {
    throw Error(ErrorCode::InvalidDimension, "CSV columns do not match the data");
  }
  std::string out = "t";
  for (const auto& name : column_names) out += "," + name;
  out += "\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out += format_double(grid[k]);
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out += ",";
      out += format_double(values(static_cast<Eigen::Index>(k), c));
    }
    out += "\n";
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (table.header.empty()) {
      table.header = cells;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::Io, "CSV line " + std::to_string(line_no) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(table.header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) {
        throw Error(ErrorCode::Io, "CSV line " + std::to_string(line_no) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw Error(ErrorCode::Io, "CSV is empty");
  return table;
}

Json model_to_json(const ODEModel& model) {
  const PolynomialBasis& basis = model.basis();
  const CoefficientMatrix& theta = model.theta();
  Json doc;
  doc["dimension"] = basis.dimension();
  doc["order"] = basis.order();
  doc["state_names"] = model.state_names();
  Json terms = Json::array();
  for (std::size_t j = 0; j < basis.size(); ++j) terms.push_back(basis.term_label(j));
  doc["terms"] = terms;
  Json values = Json::array();
  Json active = Json::array();
  for (int i = 0; i < theta.rows(); ++i) {
    Json vrow = Json::array();
    Json arow = Json::array();
    for (int j = 0; j < theta.cols(); ++j) {
      vrow.push_back(theta.value(i, j));
      arow.push_back(theta.active(i, j));
    }
    values.push_back(vrow);
    active.push_back(arow);
  }
  doc["values"] = values;
  doc["active"] = active;
  Json ties = Json::array();
  for (const Tie& t : theta.ties()) {
    ties.push_back({{"target", {t.target.row, t.target.col}},
                    {"source", {t.source.row, t.source.col}},
                    {"scale", t.scale}});
  }
  doc["constraints"] = ties;
  return doc;
}

namespace {

template <class T>
T get_field(const Json& doc, const char* key, const char* what) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw Error(ErrorCode::Io, std::string(what) + " is missing '" + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string(what) + " field '" + key + "': " + e.what());
  }
}

Entry entry_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::Io, "constraint entry must be [row, col]");
  return Entry{j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

ODEModel model_from_json(const Json& doc) {
  const int d = get_field<int>(doc, "dimension", "model");
  const int p = get_field<int>(doc, "order", "model");
  PolynomialBasis basis(d, p);
  const auto values = get_field<std::vector<std::vector<double>>>(doc, "values", "model");
  const auto active = get_field<std::vector<std::vector<bool>>>(doc, "active", "model");
  if (values.size() != static_cast<std::size_t>(d) || active.size() != values.size()) {
    throw Error(ErrorCode::Io, "model values must have one row per state");
  }
  Eigen::MatrixXd m(d, static_cast<Eigen::Index>(basis.size()));
  for (int i = 0; i < d; ++i) {
    if (values[static_cast<std::size_t>(i)].size() != basis.size() ||
        active[static_cast<std::size_t>(i)].size() != basis.size()) {
      throw Error(ErrorCode::Io, "model row " + std::to_string(i) + " does not match the basis size");
    }
    for (std::size_t j = 0; j < basis.size(); ++j) m(i, static_cast<Eigen::Index>(j)) = values[static_cast<std::size_t>(i)][j];
  }
  CoefficientMatrix theta(m);
  if (doc.contains("constraints")) {
    for (const auto& t : doc.at("constraints")) {
      theta.add_tie(entry_from_json(t.at("target")), entry_from_json(t.at("source")),
                    t.at("scale").get<double>());
    }
  }
  for (int i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      if (!active[static_cast<std::size_t>(i)][j] && !theta.is_tie_target(i, static_cast<int>(j))) {
        theta.deactivate(i, static_cast<int>(j));
      }
    }
  }
  theta.enforce();
  std::vector<std::string> names = doc.contains("state_names")
                                       ? doc.at("state_names").get<std::vector<std::string>>()
                                       : default_state_names(d);
  return ODEModel(basis, theta, names);
}

namespace {

Json matrix_rows(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_rows(const Json& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(cols)) {
      throw Error(ErrorCode::Io, "sidecar offset row has the wrong width");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

Json sidecar_to_json(const FittedModel& fitted) {
  Json doc;
  Json hidden = Json::array();
  for (const auto& h : fitted.hidden_init) {
    hidden.push_back(std::vector<double>(h.data(), h.data() + h.size()));
  }
  doc["hidden_init"] = hidden;
  if (fitted.noise) {
    const NoiseField& f = *fitted.noise;
    Json noise;
    noise["observed_dims"] = f.observed_dims;
    noise["scale_reference"] =
        std::vector<double>(f.scale_reference.data(), f.scale_reference.data() + f.scale_reference.size());
    Json offsets = Json::array();
    for (const auto& off : f.offsets) offsets.push_back(matrix_rows(off));
    noise["offsets"] = offsets;
    doc["noise"] = noise;
  } else {
    doc["noise"] = nullptr;
  }
  return doc;
}

void sidecar_from_json(const Json& doc, FittedModel& fitted) {
  fitted.hidden_init.clear();
  if (doc.contains("hidden_init")) {
    for (const auto& h : doc.at("hidden_init")) {
      const auto v = h.get<std::vector<double>>();
      fitted.hidden_init.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
  }
  fitted.noise.reset();
  if (doc.contains("noise") && !doc.at("noise").is_null()) {
    const Json& n = doc.at("noise");
    NoiseField f;
    f.observed_dims = n.at("observed_dims").get<std::vector<int>>();
    const auto ref = n.at("scale_reference").get<std::vector<double>>();
    f.scale_reference = Eigen::Map<const Eigen::VectorXd>(ref.data(), static_cast<Eigen::Index>(ref.size()));
    for (const auto& off : n.at("offsets")) {
      f.offsets.push_back(matrix_from_rows(off, static_cast<Eigen::Index>(f.observed_dims.size())));
    }
    fitted.noise = std::move(f);
  }
}

std::string training_log_csv(const std::vector<LogRecord>& log) {
  std::string out = "iteration,smoothed_loss,active,mu,gamma\n";
  for (const LogRecord& r : log) {
    out += std::to_string(r.iteration) + "," + format_double(r.smoothed_loss) + "," +
           std::to_string(r.active) + "," + format_double(r.mu) + "," + format_double(r.gamma) + "\n";
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

namespace {

Trajectory trajectory_from_table(const CsvTable& table, const std::vector<int>& columns_to_dims,
                                 int dimension, const std::string& source) {
  if (table.header.empty() || table.header.front() != "t") {
    throw Error(ErrorCode::Io, source + ": first CSV column must be 't'");
  }
  std::vector<double> times;
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.rows.size()), dimension);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    times.push_back(table.rows[r][0]);
    for (std::size_t c = 1; c < table.rows[r].size(); ++c) {
      values(static_cast<Eigen::Index>(r), columns_to_dims[c - 1]) = table.rows[r][c];
    }
  }
  Trajectory traj;
  traj.grid = TimeGrid(std::move(times));
  traj.values = std::move(values);
  traj.observed.assign(static_cast<std::size_t>(dimension), false);
  for (int d : columns_to_dims) traj.observed[static_cast<std::size_t>(d)] = true;
  return traj;
}

}  // namespace

Dataset load_dataset(const fs::path& manifest_path) {
  const Json manifest = read_json(manifest_path);
  const auto names = get_field<std::vector<std::string>>(manifest, "state_names", "manifest");
  const auto observed = get_field<std::vector<bool>>(manifest, "observed", "manifest");
  if (names.size() != observed.size() || names.empty()) {
    throw Error(ErrorCode::Io, "manifest state_names and observed must have equal, non-zero length");
  }
  const int d = static_cast<int>(names.size());
  Dataset data;
  data.state_names = names;
  const fs::path base = manifest_path.parent_path();
  for (const auto& entry : get_field<Json>(manifest, "trajectories", "manifest")) {
    const std::string file = get_field<std::string>(entry, "file", "manifest trajectory");
    const CsvTable table = parse_csv(read_text(base / file));
    std::vector<int> cols;
    for (std::size_t c = 1; c < table.header.size(); ++c) {
      const auto it = std::find(names.begin(), names.end(), table.header[c]);
      if (it == names.end()) throw Error(ErrorCode::Io, file + ": unknown column " + table.header[c]);
      cols.push_back(static_cast<int>(it - names.begin()));
    }
    Trajectory traj = trajectory_from_table(table, cols, d, file);
    if (traj.observed != observed) {
      throw Error(ErrorCode::Io, file + ": columns disagree with the manifest's observed mask");
    }
    // Synthetic runs also ship the noiseless states (every column, hidden
    // ones included) for diagnostics.
    if (entry.contains("clean_file")) {
      const std::string clean_file = get_field<std::string>(entry, "clean_file", "manifest trajectory");
      const CsvTable clean = parse_csv(read_text(base / clean_file));
      std::vector<int> all(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) all[static_cast<std::size_t>(i)] = i;
      if (clean.header.size() != static_cast<std::size_t>(d) + 1 || clean.rows.size() != traj.samples()) {
        throw Error(ErrorCode::Io, clean_file + ": shape disagrees with " + file);
      }
      traj.clean = trajectory_from_table(clean, all, d, clean_file).values;
      traj.injected_noise = traj.values - traj.clean;
      for (int i = 0; i < d; ++i) {
        if (!observed[static_cast<std::size_t>(i)]) traj.injected_noise.col(i).setZero();
      }
    }
    if (entry.contains("conserved_total") && !entry.at("conserved_total").is_null()) {
      traj.conserved_total = entry.at("conserved_total").get<double>();
    }
    data.trajectories.push_back(std::move(traj));
  }
  if (data.trajectories.empty()) throw Error(ErrorCode::Io, "manifest lists no trajectories");
  data.validate();
  return data;
}

Dataset load_csv_dataset(const fs::path& csv_path) {
  const CsvTable table = parse_csv(read_text(csv_path));
  const int d = static_cast<int>(table.header.size()) - 1;
  if (d < 1) throw Error(ErrorCode::Io, csv_path.string() + ": need at least one state column");
  std::vector<int> cols(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) cols[static_cast<std::size_t>(i)] = i;
  Dataset data;
  data.state_names.assign(table.header.begin() + 1, table.header.end());
  data.trajectories.push_back(trajectory_from_table(table, cols, d, csv_path.string()));
  data.validate();
  return data;
}

}  // namespace odenet
