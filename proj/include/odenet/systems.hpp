#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <random>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odenet/data.hpp"
#include "odenet/model.hpp"

namespace odenet {

enum class LvRegime { OverDamped, Spiral, LimitCycle };
enum class ActinModel { DataDriven, Physical };
enum class Salt { KCl, MgCl2 };

LvRegime parse_lv_regime(const std::string& name);
ActinModel parse_actin_model(const std::string& name);
Salt parse_salt(const std::string& name);
std::string to_string(LvRegime regime);
std::string to_string(ActinModel model);
std::string to_string(Salt salt);

/// A known system with its exact coefficients (zero entries inactive) and
/// default experiment settings.
struct ReferenceSystem {
  std::string name;
  ODEModel model;
  std::vector<Eigen::VectorXd> initial_conditions;
  std::vector<std::optional<double>> conserved_totals;  // parallel to initial_conditions
  std::vector<bool> observed;
  double horizon = 0.0;
  double dt = 0.0;
  double max_internal_step = 1e-3;  // data generation RK4 step cap
};

/// dx1/dt = C11 x1 + C12 x1 x2 + C13 x1^2,  dx2/dt = C21 x2 + C22 x1 x2 + C23 x2^2
ReferenceSystem make_lv(LvRegime regime);
/// Builds an LV system from (C11, C12, C13, C21, C22, C23).
ReferenceSystem make_lv(const std::array<double, 6>& c);
ReferenceSystem make_lorenz();
ReferenceSystem make_actin(ActinModel kind, Salt salt);

/// Monomer totals (μM) of the seven actin experiments for each salt.
std::vector<double> actin_concentrations(Salt salt);

/// Coefficient layouts for fitting: the active mask and ties of the actin
/// models with every free entry set to zero.
CoefficientMatrix actin_data_driven_structure();
CoefficientMatrix actin_physical_structure();

/// α0..α5 of the data-driven model; α0..α10 of the physical model.
std::vector<double> actin_coefficients(ActinModel kind, Salt salt);

/// Fills an actin structure with the given α's (zero α's are deactivated).
CoefficientMatrix actin_matrix(ActinModel kind, const std::vector<double>& alpha);

/// Physical-model starting point: α9 = elongation, α10 = -elongation times the
/// mean final monomer level, every other free α active at zero.
CoefficientMatrix actin_physical_initial_guess(const Dataset& dataset, double elongation);

/// Reads α's back out of a fitted actin coefficient matrix.
std::vector<double> actin_alphas(ActinModel kind, const CoefficientMatrix& theta);

enum class Stability { StableNode, StableSpiral, UnstableNode, UnstableSpiral, Saddle, Center, Marginal };
std::string to_string(Stability s);

struct FixedPoint {
  Eigen::Vector2d point;
  Eigen::Matrix2d jacobian;
  std::complex<double> eigenvalues[2];
  Stability stability = Stability::Marginal;
};

/// The closed-form LV fixed points that exist for the given coefficients,
/// each classified by the eigenvalues of the state Jacobian.
std::vector<FixedPoint> lv_fixed_points(const ReferenceSystem& system);
std::vector<FixedPoint> lv_fixed_points(const ODEModel& model);

struct GenerateOptions {
  std::vector<Eigen::VectorXd> initial_conditions;  // empty: system defaults
  std::vector<std::optional<double>> conserved_totals;
  double horizon = 0.0;                             // <= 0: system default
  double dt = 0.0;                                  // <= 0: system default
  std::vector<double> grid;                         // explicit grid overrides horizon/dt
  double noise = 0.0;
  std::uint64_t seed = 0;
  double max_internal_step = 0.0;                   // <= 0: system default
};

/// Integrates every initial condition with RK4 at least 10x finer than the
/// sampling grid, then injects noise with a per-trajectory RNG stream.
Dataset generate_dataset(const ReferenceSystem& system, const GenerateOptions& options);

/// RNG stream for trajectory `index` of a run seeded with `seed`.
std::mt19937_64 trajectory_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace odenet
