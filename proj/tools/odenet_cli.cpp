#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "odenet/odenet.h"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mode;
  std::optional<int> threads;
};

void print_line(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

int exit_code(odenet_status s) {
  switch (s) {
    case ODENET_OK: return 0;
    case ODENET_ERROR_TRAINING_DIVERGED: return 2;
    case ODENET_ERROR_SIMULATION_DIVERGED: return 3;
    case ODENET_ERROR_RECIPE_FAILED: return 4;
    default: return 1;
  }
}

int report_failure(odenet_status s) {
  std::fprintf(stderr, "error: %s\n", odenet_last_error());
  return exit_code(s);
}

int run_verb(const std::string& verb, const Flags& f) {
  odenet_run* run = nullptr;
  odenet_status s = odenet_run_open(f.config.empty() ? nullptr : f.config.c_str(), &run);
  if (s != ODENET_OK) return report_failure(s);
  if (f.seed) s = odenet_run_set_seed(run, *f.seed);
  if (s == ODENET_OK && !f.out.empty()) s = odenet_run_set_output(run, f.out.c_str());
  if (s == ODENET_OK && !f.mode.empty()) s = odenet_run_set_mode(run, f.mode.c_str());
  if (s == ODENET_OK && f.threads) s = odenet_run_set_threads(run, *f.threads);
  if (s != ODENET_OK) {
    odenet_run_close(run);
    return report_failure(s);
  }
  odenet_run_set_log(run, print_line, nullptr);
  char* summary = nullptr;
  s = odenet_run_execute(run, verb.c_str(), &summary);
  odenet_run_close(run);
  if (s != ODENET_OK) return report_failure(s);
  std::printf("%s\n", summary);
  odenet_string_free(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse ODE identification: generate data, fit models, simulate, compare, report."};
  app.require_subcommand(1);
  app.set_version_flag("--version", odenet_version());

  Flags flags;
  std::string verb;
  for (const char* name : {"generate", "fit", "simulate", "compare", "report"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "Run config JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Seed (overrides the config)");
    sub->add_option("--out", flags.out, "Output directory (overrides the config)");
    sub->add_option("--mode", flags.mode, "odenet or sindy")->check(CLI::IsMember({"odenet", "sindy"}));
    sub->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->callback([&verb, name] { verb = name; });
    if (std::string(name) != "report") sub->needs(sub->get_option("--config"));
  }

  std::string recipe;
  std::string recipes_dir = "recipes";
  std::string recipe_out = "recipe_runs";
  CLI::App* rec = app.add_subcommand("recipe", "Run a shipped experiment recipe and check its bounds");
  rec->add_option("id", recipe, "Recipe id or path to a recipe JSON")->required();
  rec->add_option("--recipes-dir", recipes_dir, "Where recipe ids are looked up");
  rec->add_option("--out", recipe_out, "Artifacts root");
  rec->callback([&verb] { verb = "recipe"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version are successes; every other usage error is a config error.
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (verb == "recipe") {
    int passed = 0;
    char* summary = nullptr;
    const odenet_status s =
        odenet_recipe_run(recipe.c_str(), recipes_dir.c_str(), recipe_out.c_str(), print_line, nullptr, &passed, &summary);
    if (summary != nullptr) {
      std::printf("%s", summary);
      odenet_string_free(summary);
    }
    if (s != ODENET_OK) return report_failure(s);
    return 0;
  }
  return run_verb(verb, flags);
}
