#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "odenet/commands.hpp"
#include "odenet/io.hpp"

namespace odenet {

/// Result of one case of a recipe (one scenario, possibly over several seeds).
struct CaseOutcome {
  std::string name;
  bool passed = false;
  std::string detail;  // one-line human summary
  Json metrics;
};

struct RecipeOutcome {
  std::string id;
  std::string description;
  bool passed = false;
  std::vector<CaseOutcome> cases;
};

/// Runs every case of a recipe file and writes artifacts plus outcome.json
/// under `<out_root>/<id>/`. A recipe passes iff all of its cases pass.
RecipeOutcome run_recipe(const std::filesystem::path& recipe_file, const std::filesystem::path& out_root,
                         const LogSink& log = {});

/// `<dir>/<id>.json`, or `id` itself when it already names a file.
std::filesystem::path find_recipe(const std::filesystem::path& dir, const std::string& id);

Json outcome_to_json(const RecipeOutcome& outcome);

/// Random small (d <= 3, p <= 2, n <= 5) loss instances with noise offsets and
/// hidden initial values; compares forward-sensitivity gradients against
/// central finite differences.
struct GradientCheck {
  std::size_t instances = 0;
  std::size_t components = 0;
  std::size_t failures = 0;
  double worst_relative = 0.0;  // max |g - fd| / |fd| over components above the absolute floor
  double worst_absolute = 0.0;
};
GradientCheck check_gradients(std::size_t instances, std::uint64_t seed, double relative_tolerance,
                              double absolute_tolerance);

/// Fitted global order of fixed-step RK4 on dx/dt = -x over [0, 1].
double rk4_observed_order(const std::vector<double>& steps);
/// Max |x(t) - exp(-t)| of dopri5 on [0, 1] at the given tolerance.
double dopri5_max_error(double tolerance);

}  // namespace odenet
