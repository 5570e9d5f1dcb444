#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "odenet/data.hpp"
#include "odenet/integrate.hpp"
#include "odenet/model.hpp"
#include "odenet/noise.hpp"

namespace odenet {

/// State and forward sensitivities on grid[1..]:
///   dS_theta/dt = J(x) S_theta + ∂f/∂p,   S_theta(t0) = 0
///   dS_init/dt  = J(x) S_init,           S_init(t0)  = selected unit columns
struct SensitivityTrajectory {
  Eigen::MatrixXd states;                 // n x d
  std::vector<Eigen::MatrixXd> s_theta;   // n of d x K
  std::vector<Eigen::MatrixXd> s_init;    // n of d x H
  std::vector<int> init_dims;             // state dimension of each S_init column
};

/// `learnable_init[i]` marks x0 components whose sensitivity is tracked.
/// `params` defaults to the model's current free parameters.
SensitivityTrajectory integrate_with_sensitivity(const ODEModel& model,
                                                 const Eigen::VectorXd& x0,
                                                 const std::vector<bool>& learnable_init,
                                                 const TimeGrid& grid,
                                                 const IntegratorConfig& cfg);
SensitivityTrajectory integrate_with_sensitivity(const ODEModel& model,
                                                 const std::vector<FreeParameter>& params,
                                                 const Eigen::VectorXd& x0,
                                                 const std::vector<bool>& learnable_init,
                                                 const TimeGrid& grid,
                                                 const IntegratorConfig& cfg);

/// Loss contributed by a piece whose integration failed.
inline constexpr double kFailedPieceLoss = 1e6;

struct LossInputs {
  const Dataset* dataset = nullptr;
  const ODEModel* model = nullptr;
  const NoiseField* noise = nullptr;                  // optional
  const std::vector<Eigen::VectorXd>* hidden_init = nullptr;  // per trajectory, hidden dims in order
  double mu = 0.0;
  IntegratorConfig integrator;
  int threads = 1;
};

struct BatchGradient {
  double loss = 0.0;       // data + mu * |p|_1
  double data_loss = 0.0;  // sum of squared residuals on observed dimensions
  double l1 = 0.0;         // |p|_1 over free parameters
  std::size_t labels = 0;  // labelled time points that contributed
  Eigen::VectorXd grad_theta;                              // per free parameter
  std::map<std::pair<std::size_t, std::size_t>, Eigen::VectorXd> grad_noise;  // (traj, sample) -> per observed dim
  std::map<std::size_t, Eigen::VectorXd> grad_hidden;      // traj -> per hidden dim
  std::size_t failed_pieces = 0;
  std::vector<std::string> failures;
};

/// Squared-residual trajectory loss plus L1 penalty, with exact gradients
/// from forward sensitivities. Pieces on trajectories with hidden dimensions
/// must start at sample 0, where the learnable hidden values live.
BatchGradient loss_and_gradient(const Batch& batch, const LossInputs& inputs);

}  // namespace odenet
