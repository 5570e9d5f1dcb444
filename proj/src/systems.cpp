#include "odenet/systems.hpp"

#include <algorithm>
#include <cmath>

#include "odenet/error.hpp"
#include "odenet/noise.hpp"

namespace odenet {

namespace {

// basis(2,2): 1, x1, x2, x1^2, x1*x2, x2^2
constexpr int kLvX1 = 1, kLvX2 = 2, kLvX1Sq = 3, kLvX1X2 = 4, kLvX2Sq = 5;

// basis(3,2) over (x1, x2, x3): 1, x1, x2, x3, x1^2, x1x2, x1x3, x2^2, x2x3, x3^2
constexpr int kL1 = 1, kL2 = 2, kL3 = 3, kL12 = 5, kL13 = 6;

// Physical actin state order (P, M, m) over basis(3,2):
// 1, P, M, m, P^2, PM, Pm, M^2, Mm, m^2
constexpr int kP = 0, kMass = 1, kMono = 2;
constexpr int cOne = 0, cP = 1, cM = 2, cm = 3, cPP = 4, cPM = 5, cPm = 6, cMm = 8, cmm = 9;

// Deactivates every free entry whose value is exactly zero.
void deactivate_zeros(CoefficientMatrix& theta) {
  for (const FreeParameter& p : theta.free_parameters()) {
    if (theta.value(p.entry.row, p.entry.col) == 0.0) theta.deactivate(p.entry.row, p.entry.col);
  }
}

struct PhysicalSlot {
  int alpha;
  Entry entry;
};

// Where each α of the physical model lives as a free parameter.
const std::vector<PhysicalSlot>& physical_slots() {
  static const std::vector<PhysicalSlot> slots = {
      {0, {kP, cOne}}, {1, {kP, cm}},     {2, {kP, cmm}},    {3, {kP, cMm}},
      {4, {kP, cP}},   {5, {kP, cM}},     {6, {kP, cPP}},    {7, {kP, cPM}},
      {8, {kMass, cM}}, {9, {kMass, cPm}}, {10, {kMass, cP}},
  };
  return slots;
}

}  // namespace

LvRegime parse_lv_regime(const std::string& name) {
  if (name == "over_damped") return LvRegime::OverDamped;
  if (name == "spiral") return LvRegime::Spiral;
  if (name == "limit_cycle") return LvRegime::LimitCycle;
  throw Error(ErrorCode::Config, "unknown LV regime '" + name + "'");
}

ActinModel parse_actin_model(const std::string& name) {
  if (name == "data_driven") return ActinModel::DataDriven;
  if (name == "physical") return ActinModel::Physical;
  throw Error(ErrorCode::Config, "unknown actin model '" + name + "'");
}

Salt parse_salt(const std::string& name) {
  if (name == "KCl") return Salt::KCl;
  if (name == "MgCl2") return Salt::MgCl2;
  throw Error(ErrorCode::Config, "unknown salt '" + name + "'");
}

std::string to_string(LvRegime regime) {
  switch (regime) {
    case LvRegime::OverDamped: return "over_damped";
    case LvRegime::Spiral: return "spiral";
    case LvRegime::LimitCycle: return "limit_cycle";
  }
  return "?";
}

std::string to_string(ActinModel model) {
  return model == ActinModel::DataDriven ? "data_driven" : "physical";
}

std::string to_string(Salt salt) { return salt == Salt::KCl ? "KCl" : "MgCl2"; }

ReferenceSystem make_lv(const std::array<double, 6>& c) {
  const PolynomialBasis basis(2, 2);
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(2, 6);
  values(0, kLvX1) = c[0];
  values(0, kLvX1X2) = c[1];
  values(0, kLvX1Sq) = c[2];
  values(1, kLvX2) = c[3];
  values(1, kLvX1X2) = c[4];
  values(1, kLvX2Sq) = c[5];
  CoefficientMatrix theta(values);
  deactivate_zeros(theta);
  ReferenceSystem sys{"lv", ODEModel(basis, theta), {}, {}, {true, true}, 10.0, 0.01};
  sys.initial_conditions.push_back(Eigen::Vector2d(1.0, 1.0));
  sys.conserved_totals.emplace_back();
  return sys;
}

ReferenceSystem make_lv(LvRegime regime) {
  switch (regime) {
    case LvRegime::OverDamped: {
      auto sys = make_lv({1.5, -1.0, -1.0, -1.0, 1.0, 0.0});
      sys.name = "lv/over_damped";
      return sys;
    }
    case LvRegime::Spiral: {
      auto sys = make_lv({2.0, -1.1, -0.1, -1.0, -0.1, 0.9});
      sys.name = "lv/spiral";
      return sys;
    }
    case LvRegime::LimitCycle: {
      auto sys = make_lv({1.0, -0.05, 0.0, -1.0, 0.03, 0.0});
      sys.name = "lv/limit_cycle";
      sys.initial_conditions = {Eigen::Vector2d(10.0, 10.0)};
      sys.horizon = 30.0;
      return sys;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown LV regime");
}

ReferenceSystem make_lorenz() {
  const PolynomialBasis basis(3, 2);
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(3, 10);
  values(0, kL1) = -10.0;
  values(0, kL2) = 10.0;
  values(1, kL1) = 28.0;
  values(1, kL2) = -1.0;
  values(1, kL13) = -1.0;
  values(2, kL3) = -8.0 / 3.0;
  values(2, kL12) = 1.0;
  CoefficientMatrix theta(values);
  deactivate_zeros(theta);
  ReferenceSystem sys{"lorenz", ODEModel(basis, theta), {}, {}, {true, true, true}, 25.0, 0.01};
  sys.initial_conditions.push_back(Eigen::Vector3d(-8.0, 7.0, 27.0));
  sys.conserved_totals.emplace_back();
  return sys;
}

std::vector<double> actin_concentrations(Salt salt) {
  if (salt == Salt::KCl) return {7.4, 9.6, 12.4, 14.2, 16.2, 18.4, 20.5};
  return {6.7, 8.5, 11.5, 14.9, 17.3, 20.3, 22.9};
}

std::vector<double> actin_coefficients(ActinModel kind, Salt salt) {
  if (kind == ActinModel::DataDriven) {
    if (salt == Salt::KCl) return {4.62e-1, -2.16e-1, -5.49e-1, 5.70e-3, 1.10e-1, 7.87e1};
    return {0.0, -1.41e-2, 9.20e-3, -3.75e-2, 2.28e-1, 3.10e1};
  }
  // α0..α10; entries not listed for a salt are zero.
  if (salt == Salt::KCl) {
    return {0.0, -5.12e-2, 7.98e-3, 1.16e-2, -5.33e-1, 0.0, 0.0, 0.0, 0.0, 7.39e-1, -8.82e-1};
  }
  return {0.0, 2.15e-2, 0.0, 2.3e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 1.19e1, -2.97e1};
}

CoefficientMatrix actin_data_driven_structure() {
  // State (M, m) over basis(2,2): 1, M, m, M^2, Mm, m^2; row m mirrors row M.
  CoefficientMatrix theta(2, 6);
  for (int j = 0; j < 6; ++j) theta.add_tie(Entry{1, j}, Entry{0, j}, -1.0);
  return theta;
}

CoefficientMatrix actin_physical_structure() {
  CoefficientMatrix theta(3, 10);
  std::vector<bool> used(30, false);
  for (const auto& slot : physical_slots()) used[static_cast<std::size_t>(slot.entry.row * 10 + slot.entry.col)] = true;
  // Shared nucleation terms appear in both dP/dt and dM/dt.
  theta.add_tie(Entry{kMass, cOne}, Entry{kP, cOne}, 1.0);
  theta.add_tie(Entry{kMass, cm}, Entry{kP, cm}, 1.0);
  theta.add_tie(Entry{kMass, cmm}, Entry{kP, cmm}, 2.0);
  theta.add_tie(Entry{kMass, cMm}, Entry{kP, cMm}, 1.0);
  for (int c : {cOne, cm, cmm, cMm}) used[static_cast<std::size_t>(kMass * 10 + c)] = true;
  // Mass conservation: dm/dt = -dM/dt.
  for (int c : {cOne, cm, cmm, cMm, cM, cPm, cP}) {
    theta.add_tie(Entry{kMono, c}, Entry{kMass, c}, -1.0);
    used[static_cast<std::size_t>(kMono * 10 + c)] = true;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 10; ++j) {
      if (!used[static_cast<std::size_t>(i * 10 + j)]) theta.deactivate(i, j);
    }
  }
  return theta;
}

CoefficientMatrix actin_matrix(ActinModel kind, const std::vector<double>& alpha) {
  if (kind == ActinModel::DataDriven) {
    if (alpha.size() != 6) throw Error(ErrorCode::InvalidArgument, "data-driven actin model has 6 coefficients");
    CoefficientMatrix theta = actin_data_driven_structure();
    for (int j = 0; j < 6; ++j) theta.set_value(0, j, alpha[static_cast<std::size_t>(j)]);
    deactivate_zeros(theta);
    return theta;
  }
  if (alpha.size() != 11) throw Error(ErrorCode::InvalidArgument, "physical actin model has 11 coefficients");
  CoefficientMatrix theta = actin_physical_structure();
  for (const auto& slot : physical_slots()) {
    theta.set_value(slot.entry.row, slot.entry.col, alpha[static_cast<std::size_t>(slot.alpha)]);
  }
  deactivate_zeros(theta);
  return theta;
}

CoefficientMatrix actin_physical_initial_guess(const Dataset& dataset, double elongation) {
  if (dataset.dimension() != 3) {
    throw Error(ErrorCode::InvalidDimension, "physical actin structure needs (P, M, m) data");
  }
  double final_monomer = 0.0;
  for (const Trajectory& t : dataset.trajectories) final_monomer += t.values(t.values.rows() - 1, kMono);
  final_monomer /= static_cast<double>(dataset.trajectories.size());
  CoefficientMatrix theta = actin_physical_structure();
  theta.set_value(kMass, cPm, elongation);
  theta.set_value(kMass, cP, -elongation * final_monomer);
  return theta;
}

std::vector<double> actin_alphas(ActinModel kind, const CoefficientMatrix& theta) {
  if (kind == ActinModel::DataDriven) {
    std::vector<double> a(6);
    for (int j = 0; j < 6; ++j) a[static_cast<std::size_t>(j)] = theta.value(0, j);
    return a;
  }
  std::vector<double> a(11);
  for (const auto& slot : physical_slots()) {
    a[static_cast<std::size_t>(slot.alpha)] = theta.value(slot.entry.row, slot.entry.col);
  }
  return a;
}

ReferenceSystem make_actin(ActinModel kind, Salt salt) {
  const auto alpha = actin_coefficients(kind, salt);
  const auto totals = actin_concentrations(salt);
  if (kind == ActinModel::DataDriven) {
    ReferenceSystem sys{"actin/data_driven/" + to_string(salt),
                        ODEModel(PolynomialBasis(2, 2), actin_matrix(kind, alpha), {"M", "m"}),
                        {}, {}, {true, true}, 0.2, 0.002, 1e-5};
    for (double total : totals) {
      const double seed = 1e-3 * total;
      sys.initial_conditions.push_back(Eigen::Vector2d(seed, total - seed));
      sys.conserved_totals.emplace_back(total);
    }
    return sys;
  }
  ReferenceSystem sys{"actin/physical/" + to_string(salt),
                      ODEModel(PolynomialBasis(3, 2), actin_matrix(kind, alpha), {"P", "M", "m"}),
                      {}, {}, {false, true, true}, 3.0, 0.03, 1e-3};
  for (double total : totals) {
    // One filament per seeded monomer to start with.
    const double seed = 1e-3 * total;
    sys.initial_conditions.push_back(Eigen::Vector3d(seed, seed, total - seed));
    sys.conserved_totals.emplace_back(total);
  }
  return sys;
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::StableNode: return "stable node";
    case Stability::StableSpiral: return "stable spiral";
    case Stability::UnstableNode: return "unstable node";
    case Stability::UnstableSpiral: return "unstable spiral";
    case Stability::Saddle: return "saddle";
    case Stability::Center: return "center";
    case Stability::Marginal: return "marginal";
  }
  return "?";
}

std::vector<FixedPoint> lv_fixed_points(const ReferenceSystem& system) {
  return lv_fixed_points(system.model);
}

std::vector<FixedPoint> lv_fixed_points(const ODEModel& model) {
  if (model.dimension() != 2 || model.basis().order() != 2) {
    throw Error(ErrorCode::BasisMismatch, "LV fixed points need a basis(2,2) model");
  }
  const auto& th = model.theta();
  const double c11 = th.value(0, kLvX1), c12 = th.value(0, kLvX1X2), c13 = th.value(0, kLvX1Sq);
  const double c21 = th.value(1, kLvX2), c22 = th.value(1, kLvX1X2), c23 = th.value(1, kLvX2Sq);

  std::vector<Eigen::Vector2d> points{Eigen::Vector2d(0.0, 0.0)};
  if (c13 != 0.0) points.emplace_back(-c11 / c13, 0.0);
  if (c23 != 0.0) points.emplace_back(0.0, -c21 / c23);
  const double den = c12 * c22 - c13 * c23;
  if (den != 0.0) {
    points.emplace_back(-(c12 * c21 - c11 * c23) / den, -(c11 * c22 - c13 * c21) / den);
  }

  std::vector<FixedPoint> out;
  for (const auto& p : points) {
    FixedPoint fp;
    fp.point = p;
    fp.jacobian = model.rhs_jacobian_state(p);
    Eigen::EigenSolver<Eigen::Matrix2d> es(fp.jacobian);
    fp.eigenvalues[0] = es.eigenvalues()[0];
    fp.eigenvalues[1] = es.eigenvalues()[1];
    const double scale = std::max(1.0, fp.jacobian.cwiseAbs().maxCoeff());
    const double tol = 1e-9 * scale;
    const double re0 = fp.eigenvalues[0].real(), re1 = fp.eigenvalues[1].real();
    const bool complex = std::abs(fp.eigenvalues[0].imag()) > tol;
    if (std::abs(re0) <= tol || std::abs(re1) <= tol) {
      fp.stability = (complex && std::abs(re0) <= tol) ? Stability::Center : Stability::Marginal;
    } else if (complex) {
      fp.stability = re0 < 0 ? Stability::StableSpiral : Stability::UnstableSpiral;
    } else if (re0 < 0 && re1 < 0) {
      fp.stability = Stability::StableNode;
    } else if (re0 > 0 && re1 > 0) {
      fp.stability = Stability::UnstableNode;
    } else {
      fp.stability = Stability::Saddle;
    }
    out.push_back(fp);
  }
  return out;
}

std::mt19937_64 trajectory_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Dataset generate_dataset(const ReferenceSystem& system, const GenerateOptions& options) {
  const auto& ics = options.initial_conditions.empty() ? system.initial_conditions
                                                       : options.initial_conditions;
  auto totals = options.initial_conditions.empty() ? system.conserved_totals
                                                   : options.conserved_totals;
  totals.resize(ics.size());
  if (!(options.noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise must be >= 0");

  TimeGrid grid;
  if (!options.grid.empty()) {
    grid = TimeGrid(options.grid);
  } else {
    const double horizon = options.horizon > 0.0 ? options.horizon : system.horizon;
    const double dt = options.dt > 0.0 ? options.dt : system.dt;
    const auto count = static_cast<std::size_t>(std::llround(horizon / dt)) + 1;
    grid = TimeGrid::uniform(0.0, dt, count);
  }
  double widest = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) widest = std::max(widest, grid[k] - grid[k - 1]);
  const double max_step = options.max_internal_step > 0.0 ? options.max_internal_step
                                                          : system.max_internal_step;
  IntegratorConfig cfg;
  cfg.method = IntegratorMethod::Rk4;
  cfg.rk4_substeps = std::max(10, static_cast<int>(std::ceil(widest / max_step)));

  Dataset data;
  data.state_names = system.model.state_names();
  for (std::size_t i = 0; i < ics.size(); ++i) {
    const Eigen::VectorXd& x0 = ics[i];
    if (x0.size() != system.model.dimension()) {
      throw Error(ErrorCode::InvalidDimension, "initial condition has the wrong length");
    }
    Eigen::MatrixXd clean(static_cast<Eigen::Index>(grid.size()), x0.size());
    clean.row(0) = x0.transpose();
    clean.bottomRows(clean.rows() - 1) = integrate(system.model, x0, grid, cfg);

    Trajectory traj;
    traj.grid = grid;
    traj.observed = system.observed;
    traj.conserved_total = totals[i];
    traj.clean = clean;
    auto rng = trajectory_rng(options.seed, i);
    if (traj.conserved_total && x0.size() >= 2) {
      // Conserved pair (M, m): perturb M only and keep m = total - M.
      const int m_col = static_cast<int>(x0.size()) - 1;
      const int mass_col = m_col - 1;
      std::vector<bool> mask(static_cast<std::size_t>(x0.size()), false);
      mask[static_cast<std::size_t>(mass_col)] = true;
      NoisyValues noisy = inject_noise(clean, options.noise, rng, mask);
      noisy.values.col(m_col) = Eigen::VectorXd::Constant(clean.rows(), *traj.conserved_total) -
                                noisy.values.col(mass_col);
      noisy.noise.col(m_col) = -noisy.noise.col(mass_col);
      traj.values = std::move(noisy.values);
      traj.injected_noise = std::move(noisy.noise);
    } else {
      NoisyValues noisy = inject_noise(clean, options.noise, rng, system.observed);
      traj.values = std::move(noisy.values);
      traj.injected_noise = std::move(noisy.noise);
    }
    for (std::size_t dim = 0; dim < system.observed.size(); ++dim) {
      if (!system.observed[dim]) traj.values.col(static_cast<Eigen::Index>(dim)).setZero();
    }
    data.trajectories.push_back(std::move(traj));
  }
  data.validate();
  return data;
}

}  // namespace odenet
