#include "odenet/sensitivity.hpp"

#include <cmath>

#include "odenet/error.hpp"
#include "odenet/parallel.hpp"

namespace odenet {

namespace {

// Right-hand side of the state augmented with column-major S_theta and S_init.
class AugmentedSystem {
 public:
  AugmentedSystem(const ODEModel& model, const std::vector<FreeParameter>& params, int init_cols)
      : model_(model), params_(params), d_(model.dimension()),
        k_(static_cast<int>(params.size())), h_(init_cols) {}

  int size() const { return d_ * (1 + k_ + h_); }

  Eigen::VectorXd operator()(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd x = z.head(d_);
    const Eigen::VectorXd lambda = model_.basis().evaluate(x);
    Eigen::VectorXd dz(z.size());
    dz.head(d_) = model_.theta().values() * lambda;
    if (k_ + h_ == 0) return dz;

    const Eigen::MatrixXd jac = model_.theta().values() * model_.basis().jacobian(x);
    const Eigen::Map<const Eigen::MatrixXd> s(z.data() + d_, d_, k_ + h_);
    Eigen::Map<Eigen::MatrixXd> ds(dz.data() + d_, d_, k_ + h_);
    ds.noalias() = jac * s;
    for (int k = 0; k < k_; ++k) {
      for (const auto& [e, scale] : params_[static_cast<std::size_t>(k)].contributions) {
        ds(e.row, k) += scale * lambda[e.col];
      }
    }
    return dz;
  }

 private:
  const ODEModel& model_;
  const std::vector<FreeParameter>& params_;
  int d_, k_, h_;
};

}  // namespace

SensitivityTrajectory integrate_with_sensitivity(const ODEModel& model,
                                                 const Eigen::VectorXd& x0,
                                                 const std::vector<bool>& learnable_init,
                                                 const TimeGrid& grid,
                                                 const IntegratorConfig& cfg) {
  const auto params = model.theta().free_parameters();
  return integrate_with_sensitivity(model, params, x0, learnable_init, grid, cfg);
}

SensitivityTrajectory integrate_with_sensitivity(const ODEModel& model,
                                                 const std::vector<FreeParameter>& params,
                                                 const Eigen::VectorXd& x0,
                                                 const std::vector<bool>& learnable_init,
                                                 const TimeGrid& grid,
                                                 const IntegratorConfig& cfg) {
  const int d = model.dimension();
  if (x0.size() != d) {
    throw Error(ErrorCode::InvalidDimension, "initial state length does not match model");
  }
  if (!learnable_init.empty() && static_cast<int>(learnable_init.size()) != d) {
    throw Error(ErrorCode::InvalidDimension, "learnable-init mask does not match model");
  }
  SensitivityTrajectory out;
  for (int i = 0; i < static_cast<int>(learnable_init.size()); ++i) {
    if (learnable_init[static_cast<std::size_t>(i)]) out.init_dims.push_back(i);
  }
  const int k = static_cast<int>(params.size());
  const int h = static_cast<int>(out.init_dims.size());
  AugmentedSystem system(model, params, h);

  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(system.size());
  z0.head(d) = x0;
  for (int c = 0; c < h; ++c) {
    z0[d + d * (k + c) + out.init_dims[static_cast<std::size_t>(c)]] = 1.0;
  }
  const Eigen::MatrixXd rows = integrate_system(system, z0, grid, cfg);

  const Eigen::Index n = rows.rows();
  out.states = rows.leftCols(d);
  out.s_theta.reserve(static_cast<std::size_t>(n));
  out.s_init.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::VectorXd z = rows.row(r).transpose();
    const Eigen::Map<const Eigen::MatrixXd> s(z.data() + d, d, k + h);
    out.s_theta.emplace_back(s.leftCols(k));
    out.s_init.emplace_back(s.rightCols(h));
  }
  return out;
}

namespace {

struct PieceResult {
  double data_loss = 0.0;
  std::size_t labels = 0;
  Eigen::VectorXd grad_theta;
  Eigen::MatrixXd grad_noise;  // (n+1) x observed dims
  Eigen::VectorXd grad_hidden;
  bool failed = false;
  std::string failure;
};

PieceResult evaluate_piece(const BatchPiece& piece, std::size_t n, const LossInputs& in,
                           const std::vector<FreeParameter>& params) {
  const Trajectory& traj = in.dataset->trajectories.at(piece.trajectory);
  const int d = traj.dimension();
  const std::vector<int> obs = traj.observed_dims();
  const std::size_t n_obs = obs.size();
  const bool learn_noise = in.noise != nullptr;
  const bool hidden = traj.has_hidden();

  if (piece.start + n >= traj.samples()) {
    throw Error(ErrorCode::OutOfRange, "batch piece extends past the trajectory");
  }
  if (hidden && piece.start != 0) {
    throw Error(ErrorCode::Config, "pieces on trajectories with hidden states must start at 0");
  }

  PieceResult r;
  r.grad_theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  if (learn_noise) r.grad_noise = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n_obs));

  // Initial state: observed values (minus learned offsets), hidden values from
  // the per-trajectory learnable initial condition.
  Eigen::VectorXd x0(d);
  std::vector<bool> learnable(static_cast<std::size_t>(d), false);
  std::vector<int> hidden_dims;
  for (int i = 0; i < d; ++i) {
    if (traj.observed[static_cast<std::size_t>(i)]) {
      x0[i] = traj.values(static_cast<Eigen::Index>(piece.start), i);
      if (learn_noise) {
        x0[i] -= in.noise->offset(piece.trajectory, piece.start, i);
        learnable[static_cast<std::size_t>(i)] = true;
      }
    } else {
      hidden_dims.push_back(i);
    }
  }
  if (!hidden_dims.empty()) {
    if (in.hidden_init == nullptr) {
      throw Error(ErrorCode::Config, "hidden states present but no hidden initial values given");
    }
    const Eigen::VectorXd& h0 = in.hidden_init->at(piece.trajectory);
    for (std::size_t c = 0; c < hidden_dims.size(); ++c) {
      x0[hidden_dims[c]] = h0[static_cast<Eigen::Index>(c)];
      learnable[static_cast<std::size_t>(hidden_dims[c])] = true;
    }
    r.grad_hidden = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden_dims.size()));
  }

  const TimeGrid grid = traj.grid.slice(piece.start, n + 1);
  SensitivityTrajectory sens;
  try {
    sens = integrate_with_sensitivity(*in.model, params, x0, learnable, grid, in.integrator);
  } catch (const IntegrationError& e) {
    r.failed = true;
    r.failure = e.what();
    r.data_loss = kFailedPieceLoss;
    r.grad_theta.setZero();
    return r;
  }

  // Column of each learnable initial component inside S_init.
  std::vector<int> init_col(static_cast<std::size_t>(d), -1);
  for (std::size_t c = 0; c < sens.init_dims.size(); ++c) {
    init_col[static_cast<std::size_t>(sens.init_dims[c])] = static_cast<int>(c);
  }

  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t sample = piece.start + k;
    const Eigen::MatrixXd& st = sens.s_theta[k - 1];
    const Eigen::MatrixXd& si = sens.s_init[k - 1];
    for (std::size_t c = 0; c < n_obs; ++c) {
      const int i = obs[c];
      double residual = sens.states(static_cast<Eigen::Index>(k - 1), i) -
                        traj.values(static_cast<Eigen::Index>(sample), i);
      if (learn_noise) residual += in.noise->offsets[piece.trajectory](static_cast<Eigen::Index>(sample), static_cast<Eigen::Index>(c));
      r.data_loss += residual * residual;
      const double g = 2.0 * residual;
      r.grad_theta += g * st.row(i).transpose();
      if (learn_noise) {
        r.grad_noise(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) += g;
        // x0 = y0 - ê0, so ∂/∂ê0 = -S_init.
        for (std::size_t c0 = 0; c0 < n_obs; ++c0) {
          const int col = init_col[static_cast<std::size_t>(obs[c0])];
          r.grad_noise(0, static_cast<Eigen::Index>(c0)) -= g * si(i, col);
        }
      }
      for (std::size_t hc = 0; hc < hidden_dims.size(); ++hc) {
        const int col = init_col[static_cast<std::size_t>(hidden_dims[hc])];
        r.grad_hidden[static_cast<Eigen::Index>(hc)] += g * si(i, col);
      }
    }
    ++r.labels;
  }
  return r;
}

}  // namespace

BatchGradient loss_and_gradient(const Batch& batch, const LossInputs& in) {
  if (in.dataset == nullptr || in.model == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "loss inputs need a dataset and a model");
  }
  if (!(in.mu >= 0.0)) throw Error(ErrorCode::InvalidArgument, "mu must be >= 0");
  const auto params = in.model->theta().free_parameters();
  const std::size_t n = batch.segment_length;

  std::vector<PieceResult> results(batch.pieces.size());
  parallel_for(batch.pieces.size(), in.threads, [&](std::size_t i) {
    results[i] = evaluate_piece(batch.pieces[i], n, in, params);
  });

  BatchGradient out;
  out.grad_theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  for (std::size_t p = 0; p < results.size(); ++p) {
    const PieceResult& r = results[p];
    const BatchPiece& piece = batch.pieces[p];
    out.data_loss += r.data_loss;
    if (r.failed) {
      ++out.failed_pieces;
      out.failures.push_back(r.failure);
      continue;
    }
    out.labels += r.labels;
    out.grad_theta += r.grad_theta;
    if (r.grad_noise.size() > 0) {
      for (Eigen::Index k = 0; k < r.grad_noise.rows(); ++k) {
        const auto key = std::make_pair(piece.trajectory, piece.start + static_cast<std::size_t>(k));
        auto it = out.grad_noise.find(key);
        if (it == out.grad_noise.end()) {
          out.grad_noise.emplace(key, r.grad_noise.row(k).transpose());
        } else {
          it->second += r.grad_noise.row(k).transpose();
        }
      }
    }
    if (r.grad_hidden.size() > 0) {
      auto it = out.grad_hidden.find(piece.trajectory);
      if (it == out.grad_hidden.end()) {
        out.grad_hidden.emplace(piece.trajectory, r.grad_hidden);
      } else {
        it->second += r.grad_hidden;
      }
    }
  }

  const Eigen::VectorXd p = in.model->theta().free_values();
  out.l1 = p.cwiseAbs().sum();
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double sign = p[k] > 0.0 ? 1.0 : (p[k] < 0.0 ? -1.0 : 0.0);
    out.grad_theta[k] += in.mu * sign;
  }
  out.loss = out.data_loss + in.mu * out.l1;
  return out;
}

}  // namespace odenet
