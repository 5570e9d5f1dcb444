#include "odenet/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "odenet/io.hpp"
#include "odenet/noise.hpp"
#include "odenet/sindy.hpp"
#include "odenet/systems.hpp"
#include "odenet/train.hpp"

namespace odenet {

namespace fs = std::filesystem;

namespace {

void emit(const LogSink& log, const std::string& line) {
  if (log) log(line);
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string numbered(const char* prefix, std::size_t k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu.%s", prefix, k, ext);
  return buf;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      row.push_back(std::isfinite(v) ? Json(v) : Json(nullptr));
    }
    rows.push_back(row);
  }
  return rows;
}

Json comparison_json(const ModelComparison& cmp) {
  return Json{{"precision", cmp.precision},
              {"recall", cmp.recall},
              {"max_relative_error", cmp.max_relative_error},
              {"true_active", cmp.true_active},
              {"fitted_active", cmp.fitted_active},
              {"spurious", cmp.spurious},
              {"missed", cmp.missed},
              {"exact_support", cmp.exact_support()},
              {"failed", identification_failed(cmp)}};
}

double observed_sup_norm(const Dataset& data) {
  double sup = 0.0;
  for (const Trajectory& t : data.trajectories) {
    for (int c = 0; c < t.dimension(); ++c) {
      if (t.observed[static_cast<std::size_t>(c)]) sup = std::max(sup, t.values.col(c).cwiseAbs().maxCoeff());
    }
  }
  return sup;
}

CoefficientMatrix fit_structure(const RunConfig& config, const Dataset& data, const PolynomialBasis& basis) {
  switch (config.structure) {
    case StructureKind::Full:
      return CoefficientMatrix(basis.dimension(), static_cast<int>(basis.size()));
    case StructureKind::ActinDataDriven:
      if (basis.dimension() != 2 || basis.order() != 2) {
        throw Error(ErrorCode::BasisMismatch, "actin_data_driven needs a (M, m) basis of order 2");
      }
      return actin_data_driven_structure();
    case StructureKind::ActinPhysical:
      if (basis.dimension() != 3 || basis.order() != 2) {
        throw Error(ErrorCode::BasisMismatch, "actin_physical needs a (P, M, m) basis of order 2");
      }
      if (config.train.init == InitStrategy::FromStructure) {
        return actin_physical_initial_guess(data, config.train.elongation_guess);
      }
      return actin_physical_structure();
  }
  return CoefficientMatrix(basis.dimension(), static_cast<int>(basis.size()));
}

std::string comparison_table(const ODEModel& truth, const ODEModel& fitted, const ModelComparison& cmp) {
  const PolynomialBasis& basis = truth.basis();
  const auto& names = truth.state_names();
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-10s %14s %14s %10s\n", "eq", "term", "truth", "fitted", "rel.err");
  out << line;
  for (int i = 0; i < truth.dimension(); ++i) {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const double t = truth.theta().value(i, static_cast<int>(j));
      const double f = fitted.theta().value(i, static_cast<int>(j));
      if (t == 0.0 && f == 0.0) continue;
      const std::string eq = "d" + names[static_cast<std::size_t>(i)] + "/dt";
      const std::string rel = t == 0.0 ? "spurious" : fixed(std::abs(f - t) / std::abs(t), 3);
      std::snprintf(line, sizeof line, "%-8s %-10s %14.6g %14.6g %10s\n", eq.c_str(),
                    basis.term_label(j, names).c_str(), t, f, f == 0.0 ? "missed" : rel.c_str());
      out << line;
    }
  }
  out << "precision " << fixed(cmp.precision) << "  recall " << fixed(cmp.recall)
      << "  max relative error " << fixed(cmp.max_relative_error) << "\n";
  if (cmp.precision < 1.0) out << "WARNING: " << cmp.spurious << " spurious term(s), precision < 1\n";
  if (identification_failed(cmp)) out << "identification FAILED\n";
  return out.str();
}

}  // namespace

void apply_overrides(RunConfig& config, const CommandOverrides& o) {
  if (o.seed) {
    config.seed = *o.seed;
    config.train.seed = *o.seed;
  }
  if (o.output) config.output = *o.output;
  if (o.mode) config.mode = *o.mode;
  if (o.threads) {
    if (*o.threads < 1) throw Error(ErrorCode::Config, "--threads must be >= 1");
    config.train.threads = *o.threads;
  }
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::TrainingDiverged: return 2;
    case ErrorCode::Divergence:
    case ErrorCode::Stiffness:
    case ErrorCode::StepBudget:
    case ErrorCode::NonFiniteState: return 3;
    default: return 1;
  }
}

ODEModel load_truth_model(const fs::path& path) {
  const Json doc = read_json(path);
  if (doc.contains("trajectories")) {
    if (!doc.contains("model")) throw Error(ErrorCode::Io, path.string() + ": manifest records no model");
    return model_from_json(doc.at("model"));
  }
  return model_from_json(doc);
}

LoadedData load_run_data(const RunConfig& config) {
  if (config.generate) {
    const ReferenceSystem sys = make_system(*config.generate);
    return {generate_dataset(sys, make_generate_options(*config.generate, config.seed)), sys.model};
  }
  if (!config.dataset) throw Error(ErrorCode::Config, "config names no dataset");
  const fs::path& path = *config.dataset;
  if (path.extension() == ".csv") return {load_csv_dataset(path), std::nullopt};
  LoadedData loaded{load_dataset(path), std::nullopt};
  const Json manifest = read_json(path);
  if (manifest.contains("model")) loaded.truth = model_from_json(manifest.at("model"));
  return loaded;
}

std::string cmd_generate(const RunConfig& config, const LogSink& log) {
  if (!config.generate) throw Error(ErrorCode::Config, "generate needs dataset.generate");
  const GeneratorSpec& spec = *config.generate;
  const ReferenceSystem sys = make_system(spec);
  const Dataset data = generate_dataset(sys, make_generate_options(spec, config.seed));

  const auto& names = sys.model.state_names();
  std::vector<int> shown;
  Json hidden = Json::array();
  for (int i = 0; i < sys.model.dimension(); ++i) {
    if (sys.observed[static_cast<std::size_t>(i)]) {
      shown.push_back(i);
    } else {
      hidden.push_back(names[static_cast<std::size_t>(i)]);
    }
  }
  std::vector<std::string> shown_names;
  for (int i : shown) shown_names.push_back(names[static_cast<std::size_t>(i)]);

  Json trajectories = Json::array();
  std::size_t rows = 0;
  for (std::size_t k = 0; k < data.trajectories.size(); ++k) {
    const Trajectory& t = data.trajectories[k];
    Eigen::MatrixXd visible(t.values.rows(), static_cast<Eigen::Index>(shown.size()));
    for (std::size_t c = 0; c < shown.size(); ++c) visible.col(static_cast<Eigen::Index>(c)) = t.values.col(shown[c]);
    const std::string file = numbered("traj", k, "csv");
    const std::string clean_file = numbered("clean", k, "csv");
    write_text(config.output / file, trajectory_csv(t.grid, visible, shown_names));
    write_text(config.output / clean_file, trajectory_csv(t.grid, t.clean, names));
    Json entry{{"file", file}, {"clean_file", clean_file}, {"samples", t.samples()}};
    entry["conserved_total"] = t.conserved_total ? Json(*t.conserved_total) : Json(nullptr);
    trajectories.push_back(entry);
    rows += t.samples();
  }

  Json manifest;
  manifest["system"] = sys.name;
  manifest["seed"] = config.seed;
  manifest["noise"] = spec.noise;
  manifest["state_names"] = names;
  manifest["observed"] = sys.observed;
  manifest["hidden"] = hidden;
  manifest["generator"] = generator_to_json(spec);
  manifest["model"] = model_to_json(sys.model);
  manifest["trajectories"] = trajectories;
  write_json(config.output / "manifest.json", manifest);

  std::string summary = "generated " + std::to_string(data.trajectories.size()) + " trajectories (" +
                        std::to_string(rows) + " samples) of " + sys.name + " into " + config.output.string();
  emit(log, summary);
  return summary;
}

std::string cmd_fit(const RunConfig& config, const LogSink& log) {
  LoadedData loaded = load_run_data(config);
  const Dataset& data = loaded.dataset;
  const int d = data.dimension();
  const int basis_dim = config.basis_dimension.value_or(d);
  if (basis_dim != d) {
    throw Error(ErrorCode::BasisMismatch, "basis dimension " + std::to_string(basis_dim) +
                                              " does not match data dimension " + std::to_string(d));
  }
  const PolynomialBasis basis(d, config.basis_order);
  TrainConfig train_config = config.train;
  train_config.seed = config.seed;

  FittedModel fitted{ODEModel(basis, CoefficientMatrix(d, static_cast<int>(basis.size())), data.state_names),
                     {}, {}, {}, {}, {}, 0, 0.0, false, {}};
  Json summary;
  summary["mode"] = to_string(config.mode);
  summary["seed"] = config.seed;

  if (config.mode == FitMode::Sindy) {
    if (data.has_hidden()) throw Error(ErrorCode::InsufficientData, "sindy mode needs fully observed data");
    if (config.structure != StructureKind::Full) throw Error(ErrorCode::Config, "sindy mode fits the full basis only");
    const RegressionProblem problem = build_regression_problem(data, basis);
    const SindySweepResult sweep = stlsq_sweep(problem, config.sindy.thresholds, config.sindy.max_rounds, config.seed);
    fitted.model = ODEModel(basis, sweep.best.coefficients, data.state_names);
    std::string sweep_csv = "threshold,validation_residual\n";
    for (std::size_t k = 0; k < sweep.thresholds.size(); ++k) {
      sweep_csv += format_double(sweep.thresholds[k]) + "," + format_double(sweep.residuals[k]) + "\n";
    }
    write_text(config.output / "sindy_sweep.csv", sweep_csv);
    summary["sindy"] = Json{{"threshold", sweep.threshold},
                            {"validation_residual", sweep.validation_residual},
                            {"rounds", sweep.best.rounds},
                            {"rank_deficient", sweep.best.rank_deficient}};
    emit(log, "sindy: threshold " + fixed(sweep.threshold) + " chosen by validation");
  } else {
    const CoefficientMatrix structure = fit_structure(config, data, basis);
    auto progress = [&](const LogRecord& r) {
      emit(log, "iter " + std::to_string(r.iteration) + "  loss " + fixed(r.smoothed_loss) + "  active " +
                    std::to_string(r.active) + "  mu " + fixed(r.mu, 3) + "  gamma " + fixed(r.gamma, 3));
    };
    fitted = train(data, basis, structure, train_config, progress);
    for (const auto& w : fitted.warnings) emit(log, "warning: " + w);
    write_text(config.output / "train_log.csv", training_log_csv(fitted.log));
    write_json(config.output / "fit_state.json", sidecar_to_json(fitted));

    summary["iterations_run"] = fitted.iterations_run;
    summary["converged"] = fitted.converged;
    summary["final_smoothed_loss"] = fitted.final_smoothed_loss;
    summary["per_sample_loss"] =
        per_sample_loss(data, fitted, train_config.integrator, train_config.segment_length, train_config.threads);
    Json pruned = Json::array();
    for (const PruneEvent& e : fitted.prune_events) pruned.push_back({{"iteration", e.iteration}, {"term", e.label}});
    summary["pruned"] = pruned;
    summary["warnings"] = fitted.warnings;

    if (fitted.noise) {
      write_text(config.output / "noise_report.csv", noise_report_csv(noise_gaussianity_report(*fitted.noise)));
      std::vector<Eigen::MatrixXd> reference;
      for (const Trajectory& t : data.trajectories) reference.push_back(t.injected_noise);
      const bool have_reference = std::all_of(reference.begin(), reference.end(),
                                              [](const Eigen::MatrixXd& m) { return m.size() > 0; });
      if (have_reference) {
        Json corr = Json::array();
        for (int dim : fitted.noise->observed_dims) corr.push_back(noise_correlation(*fitted.noise, reference, dim));
        summary["noise_correlation"] = corr;
      }
    }
  }
  summary["observed_sup_norm"] = observed_sup_norm(data);
  summary["active_terms"] = fitted.model.theta().active_count();
  summary["train"] = train_config_to_json(train_config);

  if (loaded.truth && loaded.truth->basis() == basis) {
    summary["comparison"] = comparison_json(compare_models(loaded.truth->theta().values(), fitted.model.theta().values()));
  }

  std::string equations;
  for (const auto& line : fitted.model.render_equations(6)) equations += line + "\n";
  write_text(config.output / "equations.txt", equations);
  write_json(config.output / "model.json", model_to_json(fitted.model));
  write_json(config.output / "fit_summary.json", summary);
  emit(log, equations.substr(0, equations.empty() ? 0 : equations.size() - 1));
  return "fitted " + std::to_string(fitted.model.theta().active_count()) + " active terms; artifacts in " +
         config.output.string();
}

std::string cmd_simulate(const RunConfig& config, const LogSink& log) {
  if (!config.simulate) throw Error(ErrorCode::Config, "simulate needs a 'simulate' section");
  const SimulateSpec& spec = *config.simulate;
  if (spec.model.empty()) throw Error(ErrorCode::Config, "simulate.model is required");
  const ODEModel model = load_truth_model(spec.model);
  if (static_cast<int>(spec.x0.size()) != model.dimension()) {
    throw Error(ErrorCode::Config, "simulate.x0 has " + std::to_string(spec.x0.size()) + " entries, model needs " +
                                       std::to_string(model.dimension()));
  }
  const TimeGrid grid = spec.grid.empty() ? TimeGrid::uniform(spec.start, spec.dt, spec.count) : TimeGrid(spec.grid);
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(spec.x0.data(), static_cast<Eigen::Index>(spec.x0.size()));
  const PartialTrajectory run = integrate_partial(model, x0, grid, config.train.integrator);

  const std::size_t rows = run.completed + 1;
  Eigen::MatrixXd states(static_cast<Eigen::Index>(rows), model.dimension());
  states.row(0) = x0.transpose();
  if (run.completed > 0) states.bottomRows(static_cast<Eigen::Index>(run.completed)) = run.states.topRows(static_cast<Eigen::Index>(run.completed));
  const TimeGrid written = grid.slice(0, rows);
  write_text(config.output / "simulation.csv", trajectory_csv(written, states, model.state_names()));
  if (run.failed) {
    throw Error(ErrorCode::Divergence, "simulation diverged at t=" + fixed(run.failure_time, 6) + " (" + run.message +
                                           "); wrote " + std::to_string(rows) + " rows");
  }
  std::string summary = "simulated " + std::to_string(rows) + " points into " + (config.output / "simulation.csv").string();
  emit(log, summary);
  return summary;
}

std::string cmd_compare(const RunConfig& config, const LogSink& log) {
  if (!config.compare) throw Error(ErrorCode::Config, "compare needs a 'compare' section");
  if (config.compare->truth.empty() || config.compare->model.empty()) {
    throw Error(ErrorCode::Config, "compare.truth and compare.model are required");
  }
  const ODEModel truth = load_truth_model(config.compare->truth);
  const ODEModel fitted = load_truth_model(config.compare->model);
  if (!(truth.basis() == fitted.basis())) {
    throw Error(ErrorCode::BasisMismatch, "truth and fitted models use different bases");
  }
  const ModelComparison cmp = compare_models(truth.theta().values(), fitted.theta().values());
  Json doc = comparison_json(cmp);
  std::vector<std::string> terms;
  for (std::size_t j = 0; j < truth.basis().size(); ++j) terms.push_back(truth.basis().term_label(j, truth.state_names()));
  doc["state_names"] = truth.state_names();
  doc["terms"] = terms;
  doc["truth"] = matrix_json(truth.theta().values());
  doc["fitted"] = matrix_json(fitted.theta().values());
  doc["relative_errors"] = matrix_json(cmp.relative_errors);
  write_json(config.output / "comparison.json", doc);
  const std::string table = comparison_table(truth, fitted, cmp);
  write_text(config.output / "comparison.txt", table);
  emit(log, table.substr(0, table.size() - 1));
  return table;
}

std::string cmd_report(const RunConfig& config, const LogSink& log) {
  std::vector<fs::path> outcomes;
  if (fs::is_directory(config.output)) {
    for (const auto& entry : fs::directory_iterator(config.output)) {
      const fs::path candidate = entry.path() / "outcome.json";
      if (entry.is_directory() && fs::exists(candidate)) outcomes.push_back(candidate);
    }
  }
  std::sort(outcomes.begin(), outcomes.end());
  std::ostringstream md;
  md << "# Recipe outcomes\n\n";
  std::size_t passed = 0;
  if (outcomes.empty()) {
    md << "No recipe outcomes found under `" << config.output.string() << "`.\n";
  } else {
    md << "| recipe | result | case | details |\n|---|---|---|---|\n";
    for (const fs::path& p : outcomes) {
      const Json o = read_json(p);
      const bool ok = o.value("passed", false);
      passed += ok ? 1 : 0;
      const std::string id = o.value("id", p.parent_path().filename().string());
      bool first = true;
      for (const auto& c : o.value("cases", Json::array())) {
        md << "| " << (first ? id : "") << " | " << (first ? (ok ? "PASS" : "FAIL") : "") << " | "
           << c.value("name", "") << (c.value("passed", false) ? "" : " (failed)") << " | "
           << c.value("detail", "") << " |\n";
        first = false;
      }
      if (first) md << "| " << id << " | " << (ok ? "PASS" : "FAIL") << " | | |\n";
    }
    md << "\n" << passed << " of " << outcomes.size() << " recipes passed.\n";
  }
  write_text(config.output / "report.md", md.str());
  std::string summary = std::to_string(passed) + "/" + std::to_string(outcomes.size()) +
                        " recipes passed; wrote " + (config.output / "report.md").string();
  emit(log, summary);
  return summary;
}

}  // namespace odenet
