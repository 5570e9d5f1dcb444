#include "odenet/integrate.hpp"

namespace odenet {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) {
    throw Error(ErrorCode::Grid, "time grid needs at least two points");
  }
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!std::isfinite(times_[k])) throw Error(ErrorCode::Grid, "non-finite grid time");
    if (k > 0 && !(times_[k] > times_[k - 1])) {
      throw Error(ErrorCode::Grid, "grid times must be strictly increasing");
    }
  }
}

TimeGrid TimeGrid::uniform(double start, double step, std::size_t count) {
  std::vector<double> t(count);
  // Multiply rather than accumulate so long grids do not drift.
  for (std::size_t k = 0; k < count; ++k) t[k] = start + static_cast<double>(k) * step;
  return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::slice(std::size_t first, std::size_t count) const {
  if (first + count > times_.size()) {
    throw Error(ErrorCode::OutOfRange, "grid slice out of range");
  }
  return TimeGrid(std::vector<double>(times_.begin() + static_cast<std::ptrdiff_t>(first),
                                      times_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

void IntegratorConfig::validate() const {
  if (rk4_substeps < 1) throw Error(ErrorCode::Config, "rk4_substeps must be >= 1");
  if (!(atol > 0.0) || !(rtol > 0.0)) throw Error(ErrorCode::Config, "tolerances must be > 0");
  if (max_steps < 1) throw Error(ErrorCode::Config, "max_steps must be >= 1");
  if (!(min_step > 0.0)) throw Error(ErrorCode::Config, "min_step must be > 0");
}

Eigen::MatrixXd integrate(const ODEModel& model, const Eigen::VectorXd& x0,
                          const TimeGrid& grid, const IntegratorConfig& cfg) {
  if (x0.size() != model.dimension()) {
    throw Error(ErrorCode::InvalidDimension, "initial state length does not match model");
  }
  return integrate_system([&](const Eigen::VectorXd& x) { return model.rhs(x); }, x0, grid, cfg);
}

PartialTrajectory integrate_partial(const ODEModel& model, const Eigen::VectorXd& x0,
                                    const TimeGrid& grid, const IntegratorConfig& cfg) {
  PartialTrajectory result;
  try {
    integrate_into([&](const Eigen::VectorXd& x) { return model.rhs(x); }, x0, grid, cfg,
                   result.states, result.completed);
  } catch (const IntegrationError& e) {
    result.failed = true;
    result.error = e.code();
    result.failure_time = e.time();
    result.message = e.what();
  }
  return result;
}

}  // namespace odenet
