#include "odenet/odenet.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "odenet/commands.hpp"
#include "odenet/io.hpp"
#include "odenet/recipes.hpp"

struct odenet_run {
  odenet::RunConfig config;
  odenet::LogSink log;
};

struct odenet_model {
  odenet::ODEModel model;
};

namespace {

thread_local std::string g_last_error;

odenet_status status_for(odenet::ErrorCode code) {
  using odenet::ErrorCode;
  switch (code) {
    case ErrorCode::TrainingDiverged: return ODENET_ERROR_TRAINING_DIVERGED;
    case ErrorCode::Divergence:
    case ErrorCode::Stiffness:
    case ErrorCode::StepBudget:
    case ErrorCode::NonFiniteState: return ODENET_ERROR_SIMULATION_DIVERGED;
    case ErrorCode::Io: return ODENET_ERROR_IO;
    case ErrorCode::BasisMismatch: return ODENET_ERROR_BASIS_MISMATCH;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidDimension:
    case ErrorCode::OutOfRange:
    case ErrorCode::Grid: return ODENET_ERROR_INVALID_ARGUMENT;
    default: return ODENET_ERROR_CONFIG;
  }
}

odenet_status fail(odenet_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
odenet_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const odenet::Error& e) {
    return fail(status_for(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ODENET_ERROR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ODENET_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ODENET_ERROR_INTERNAL, e.what());
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

odenet::LogSink sink(odenet_log_fn fn, void* user) {
  if (fn == nullptr) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

}  // namespace

extern "C" {

const char* odenet_last_error(void) { return g_last_error.c_str(); }

const char* odenet_version(void) { return "0.1.0"; }

void odenet_string_free(char* s) { std::free(s); }

odenet_status odenet_run_open(const char* config_path, odenet_run** out) {
  if (out == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto run = std::make_unique<odenet_run>();
    if (config_path != nullptr) run->config = odenet::load_run_config(config_path);
    *out = run.release();
    return ODENET_OK;
  });
}

odenet_status odenet_run_set_seed(odenet_run* run, uint64_t seed) {
  if (run == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "run is NULL");
  odenet::apply_overrides(run->config, {seed, std::nullopt, std::nullopt, std::nullopt});
  return ODENET_OK;
}

odenet_status odenet_run_set_output(odenet_run* run, const char* dir) {
  if (run == nullptr || dir == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "run or dir is NULL");
  run->config.output = dir;
  return ODENET_OK;
}

odenet_status odenet_run_set_mode(odenet_run* run, const char* mode) {
  if (run == nullptr || mode == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "run or mode is NULL");
  return guarded([&] {
    run->config.mode = odenet::parse_fit_mode(mode);
    return ODENET_OK;
  });
}

odenet_status odenet_run_set_threads(odenet_run* run, int threads) {
  if (run == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "run is NULL");
  return guarded([&] {
    odenet::apply_overrides(run->config, {std::nullopt, std::nullopt, std::nullopt, threads});
    return ODENET_OK;
  });
}

void odenet_run_set_log(odenet_run* run, odenet_log_fn fn, void* user) {
  if (run != nullptr) run->log = sink(fn, user);
}

odenet_status odenet_run_execute(odenet_run* run, const char* verb, char** summary) {
  if (run == nullptr || verb == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "run or verb is NULL");
  if (summary != nullptr) *summary = nullptr;
  return guarded([&] {
    const std::string v = verb;
    std::string text;
    if (v == "generate") {
      text = odenet::cmd_generate(run->config, run->log);
    } else if (v == "fit") {
      text = odenet::cmd_fit(run->config, run->log);
    } else if (v == "simulate") {
      text = odenet::cmd_simulate(run->config, run->log);
    } else if (v == "compare") {
      text = odenet::cmd_compare(run->config, run->log);
    } else if (v == "report") {
      text = odenet::cmd_report(run->config, run->log);
    } else {
      return fail(ODENET_ERROR_INVALID_ARGUMENT, "unknown verb '" + v + "'");
    }
    if (summary != nullptr) *summary = duplicate(text);
    return ODENET_OK;
  });
}

void odenet_run_close(odenet_run* run) { delete run; }

odenet_status odenet_recipe_run(const char* recipe, const char* recipe_dir, const char* out_dir, odenet_log_fn fn,
                                void* user, int* passed, char** summary) {
  if (recipe == nullptr || out_dir == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "recipe or out_dir is NULL");
  if (passed != nullptr) *passed = 0;
  if (summary != nullptr) *summary = nullptr;
  return guarded([&] {
    const auto file = odenet::find_recipe(recipe_dir != nullptr ? recipe_dir : ".", recipe);
    const odenet::RecipeOutcome outcome = odenet::run_recipe(file, out_dir, sink(fn, user));
    std::string text = outcome.id + (outcome.passed ? " PASS" : " FAIL") + "\n";
    for (const auto& c : outcome.cases) text += "  " + c.name + (c.passed ? " ok: " : " FAIL: ") + c.detail + "\n";
    if (passed != nullptr) *passed = outcome.passed ? 1 : 0;
    if (summary != nullptr) *summary = duplicate(text);
    if (!outcome.passed) return fail(ODENET_ERROR_RECIPE_FAILED, outcome.id + " did not meet its bounds");
    return ODENET_OK;
  });
}

odenet_status odenet_model_load(const char* path, odenet_model** out) {
  if (path == nullptr || out == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "path or out is NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new odenet_model{odenet::load_truth_model(path)};
    return ODENET_OK;
  });
}

odenet_status odenet_model_from_json(const char* json, odenet_model** out) {
  if (json == nullptr || out == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "json or out is NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new odenet_model{odenet::model_from_json(odenet::Json::parse(json))};
    return ODENET_OK;
  });
}

int odenet_model_dimension(const odenet_model* model) { return model == nullptr ? 0 : model->model.dimension(); }

size_t odenet_model_active_terms(const odenet_model* model) {
  return model == nullptr ? 0 : model->model.theta().active_count();
}

odenet_status odenet_model_rhs(const odenet_model* model, const double* x, double* dxdt) {
  if (model == nullptr || x == nullptr || dxdt == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    const int d = model->model.dimension();
    const Eigen::VectorXd f = model->model.rhs(Eigen::Map<const Eigen::VectorXd>(x, d));
    Eigen::Map<Eigen::VectorXd>(dxdt, d) = f;
    return ODENET_OK;
  });
}

odenet_status odenet_model_equations(const odenet_model* model, char** text) {
  if (model == nullptr || text == nullptr) return fail(ODENET_ERROR_INVALID_ARGUMENT, "NULL argument");
  *text = nullptr;
  return guarded([&] {
    std::string s;
    for (const auto& line : model->model.render_equations(6)) s += line + "\n";
    *text = duplicate(s);
    return ODENET_OK;
  });
}

odenet_status odenet_model_simulate(const odenet_model* model, const double* x0, const double* times, size_t count,
                                    double* out) {
  if (model == nullptr || x0 == nullptr || times == nullptr || out == nullptr) {
    return fail(ODENET_ERROR_INVALID_ARGUMENT, "NULL argument");
  }
  return guarded([&] {
    const int d = model->model.dimension();
    const odenet::TimeGrid grid(std::vector<double>(times, times + count));
    const Eigen::MatrixXd states =
        odenet::integrate(model->model, Eigen::Map<const Eigen::VectorXd>(x0, d), grid, odenet::IntegratorConfig{});
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMajor>(out, states.rows(), d) = states;
    return ODENET_OK;
  });
}

void odenet_model_free(odenet_model* model) { delete model; }

}  // extern "C"
