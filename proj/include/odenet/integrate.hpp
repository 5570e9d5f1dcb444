#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "odenet/error.hpp"
#include "odenet/model.hpp"

namespace odenet {

/// Strictly increasing, finite observation times (spacing may vary).
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);

  static TimeGrid uniform(double start, double step, std::size_t count);

  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  double operator[](std::size_t k) const { return times_[k]; }
  double front() const { return times_.front(); }
  double back() const { return times_.back(); }

  /// Contiguous sub-grid [first, first + count).
  TimeGrid slice(std::size_t first, std::size_t count) const;

 private:
  std::vector<double> times_;
};

enum class IntegratorMethod { Rk4, Dopri5 };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::Dopri5;
  int rk4_substeps = 10;
  double atol = 1e-6;
  double rtol = 1e-6;
  int max_steps = 10000;  // per grid interval
  double min_step = 1e-12;

  void validate() const;
};

struct Dopri5Step {
  Eigen::VectorXd state;  // 5th-order solution
  Eigen::VectorXd error;  // difference of the embedded pair
  double error_norm = 0.0;
  bool accepted = false;
  double next_h = 0.0;
};

/// Step-size controller shared by dopri5_step: h * min(5, max(0.2, 0.9 err^-1/5)).
inline double dopri5_next_step(double h, double error_norm) {
  if (error_norm <= 0.0) return 5.0 * h;
  return h * std::min(5.0, std::max(0.2, 0.9 * std::pow(error_norm, -0.2)));
}

namespace detail {

inline void check_stage(const Eigen::VectorXd& v, double t) {
  if (!v.allFinite()) {
    throw IntegrationError(ErrorCode::Divergence, t,
                           "non-finite state at t=" + std::to_string(t));
  }
}

// Evaluates f at y, converting non-finite input or output into a divergence.
template <class F>
Eigen::VectorXd eval(F& f, const Eigen::VectorXd& y, double t) {
  check_stage(y, t);
  Eigen::VectorXd dy = f(y);
  check_stage(dy, t);
  return dy;
}

}  // namespace detail

/// Classical RK4 on an autonomous system; `f` maps state -> derivative.
template <class F>
Eigen::VectorXd rk4_step(F&& f, const Eigen::VectorXd& x, double t, double h) {
  const Eigen::VectorXd k1 = detail::eval(f, x, t);
  const Eigen::VectorXd k2 = detail::eval(f, x + 0.5 * h * k1, t);
  const Eigen::VectorXd k3 = detail::eval(f, x + 0.5 * h * k2, t);
  const Eigen::VectorXd k4 = detail::eval(f, x + h * k3, t);
  Eigen::VectorXd next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  detail::check_stage(next, t + h);
  return next;
}

/// One Dormand–Prince 5(4) attempt. The step is accepted iff the max-norm of
/// error_i / (atol + rtol * max(|x_i|, |x_new_i|)) is at most 1.
template <class F>
Dopri5Step dopri5_step(F&& f, const Eigen::VectorXd& x, double t, double h,
                       double atol, double rtol) {
  constexpr double a21 = 1.0 / 5.0;
  constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                   a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                   a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                   b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                   e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

  const Eigen::VectorXd k1 = detail::eval(f, x, t);
  const Eigen::VectorXd k2 = detail::eval(f, x + h * a21 * k1, t);
  const Eigen::VectorXd k3 = detail::eval(f, x + h * (a31 * k1 + a32 * k2), t);
  const Eigen::VectorXd k4 = detail::eval(f, x + h * (a41 * k1 + a42 * k2 + a43 * k3), t);
  const Eigen::VectorXd k5 =
      detail::eval(f, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), t);
  const Eigen::VectorXd k6 =
      detail::eval(f, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), t);

  Dopri5Step out;
  out.state = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const Eigen::VectorXd k7 = detail::eval(f, out.state, t + h);
  out.error = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

  double norm = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double scale = atol + rtol * std::max(std::abs(x[i]), std::abs(out.state[i]));
    norm = std::max(norm, std::abs(out.error[i]) / scale);
  }
  out.error_norm = norm;
  out.accepted = norm <= 1.0;
  out.next_h = dopri5_next_step(h, norm);
  return out;
}

/// Integrates `f` from x0 at grid[0] and writes the state at grid[k+1] into
/// row k of `out` (resized to (grid.size()-1) x dim). `completed` counts the
/// rows written so far, so callers can keep partial output when this throws.
template <class F>
void integrate_into(F&& f, const Eigen::VectorXd& x0, const TimeGrid& grid,
                    const IntegratorConfig& cfg, Eigen::MatrixXd& out,
                    std::size_t& completed) {
  cfg.validate();
  detail::check_stage(x0, grid.front());
  const std::size_t intervals = grid.size() - 1;
  out.resize(static_cast<Eigen::Index>(intervals), x0.size());
  completed = 0;
  Eigen::VectorXd x = x0;
  double h = grid[1] - grid[0];

  for (std::size_t k = 0; k < intervals; ++k) {
    const double t_begin = grid[k];
    const double t_end = grid[k + 1];
    if (cfg.method == IntegratorMethod::Rk4) {
      const double step = (t_end - t_begin) / cfg.rk4_substeps;
      for (int s = 0; s < cfg.rk4_substeps; ++s) {
        x = rk4_step(f, x, t_begin + s * step, step);
      }
    } else {
      double t = t_begin;
      int steps = 0;
      while (t < t_end) {
        if (++steps > cfg.max_steps) {
          throw IntegrationError(ErrorCode::StepBudget, t,
                                 "step budget exhausted at t=" + std::to_string(t));
        }
        const double remaining = t_end - t;
        // Land exactly on the grid point; avoid a sliver step right after.
        const bool last = h >= remaining * (1.0 - 1e-12);
        const double h_try = last ? remaining : h;
        Dopri5Step step = dopri5_step(f, x, t, h_try, cfg.atol, cfg.rtol);
        if (step.accepted) {
          x = std::move(step.state);
          t = last ? t_end : t + h_try;
          h = last ? std::max(h, step.next_h) : step.next_h;
        } else {
          h = step.next_h;
          if (h < cfg.min_step) {
            throw IntegrationError(ErrorCode::Stiffness, t,
                                   "step size underflow at t=" + std::to_string(t));
          }
        }
      }
    }
    out.row(static_cast<Eigen::Index>(k)) = x.transpose();
    completed = k + 1;
  }
}

template <class F>
Eigen::MatrixXd integrate_system(F&& f, const Eigen::VectorXd& x0, const TimeGrid& grid,
                                 const IntegratorConfig& cfg) {
  Eigen::MatrixXd out;
  std::size_t completed = 0;
  integrate_into(f, x0, grid, cfg, out, completed);
  return out;
}

/// Predicted states at grid[1..], one row per grid point (initial point excluded).
Eigen::MatrixXd integrate(const ODEModel& model, const Eigen::VectorXd& x0,
                          const TimeGrid& grid, const IntegratorConfig& cfg);

/// Same as integrate(), but keeps the rows computed before a failure.
struct PartialTrajectory {
  Eigen::MatrixXd states;
  std::size_t completed = 0;
  bool failed = false;
  ErrorCode error = ErrorCode::Divergence;
  double failure_time = 0.0;
  std::string message;
};
PartialTrajectory integrate_partial(const ODEModel& model, const Eigen::VectorXd& x0,
                                    const TimeGrid& grid, const IntegratorConfig& cfg);

}  // namespace odenet
