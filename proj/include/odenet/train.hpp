#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "odenet/data.hpp"
#include "odenet/integrate.hpp"
#include "odenet/model.hpp"
#include "odenet/noise.hpp"

namespace odenet {

/// Log-linear interpolation from `start` (iteration 0) to `end` (last iteration).
struct Schedule {
  double start = 1.0;
  double end = 1.0;

  double at(std::size_t iteration, std::size_t iterations) const;
};

struct AdamSettings {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class InitStrategy { RandomSmall, RegressionWarmStart, FromStructure };

struct TrainConfig {
  std::size_t batch_size = 20;      // m
  std::size_t segment_length = 5;   // n
  std::size_t iterations = 20000;
  double loss_threshold = 0.0;      // stop when the smoothed batch loss drops below
  AdamSettings adam;
  std::optional<double> learning_rate_end;  // log-linear decay target for the step size
  Schedule mu{1e-3, 1e-5};
  Schedule gamma{1e-4, 1e-3};
  std::size_t threshold_period = 100;
  std::uint64_t seed = 0;
  IntegratorConfig integrator;
  InitStrategy init = InitStrategy::RandomSmall;
  bool learn_noise = false;
  double noise_scale = 0.01;        // ε guess; sets the step unit for offsets
  double noise_learning_rate = 0.0; // <= 0: same as adam.learning_rate
  bool learn_hidden = true;
  double elongation_guess = 1.0;    // used to seed hidden initial values
  std::size_t log_every = 1;
  int threads = 1;

  void validate() const;
};

/// Adam moments for a fixed-size parameter block.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::vector<std::uint64_t> steps;  // per entry, so sparse updates bias-correct correctly

  explicit AdamState(Eigen::Index size = 0);
};

/// One Adam step on entries where `mask` is true (all when empty).
void adam_update(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
                 AdamState& state, const AdamSettings& settings,
                 const std::vector<bool>& mask = {});

/// Uniform with replacement over all valid (trajectory, start) pairs.
/// Trajectories with hidden states only offer start 0.
Batch sample_batch(const Dataset& dataset, std::size_t m, std::size_t n, std::mt19937_64& rng);

/// Random uniform(-0.1, 0.1) on every free entry, a least-squares fit on
/// finite-difference derivatives, or the values already in `structure`. The warm start falls back to random values
/// on datasets with hidden states (`warning` explains why).
CoefficientMatrix initialize_theta(const Dataset& dataset, const PolynomialBasis& basis,
                                   const CoefficientMatrix& structure, InitStrategy strategy,
                                   std::mt19937_64& rng, std::string* warning = nullptr);

/// Hidden filament number from dM/dt ≈ elongation * m * P at the first sample:
/// forward-difference slope of M over elongation * m(t0), floored at 1e-6.
double estimate_hidden_initial(const Trajectory& trajectory, int mass_dim, double elongation_guess,
                               double floor = 1e-6);

struct PruneEvent {
  std::size_t iteration = 0;
  Entry entry;
  std::string label;  // "dx1/dt: x1^2"
};

struct LogRecord {
  std::size_t iteration = 0;
  double smoothed_loss = 0.0;
  std::size_t active = 0;
  double mu = 0.0;
  double gamma = 0.0;
};

struct FittedModel {
  ODEModel model;
  std::optional<NoiseField> noise;
  std::vector<Eigen::VectorXd> hidden_init;  // per trajectory, empty without hidden states
  std::vector<double> loss_history;          // batch loss per iteration
  std::vector<PruneEvent> prune_events;
  std::vector<LogRecord> log;
  std::size_t iterations_run = 0;
  double final_smoothed_loss = 0.0;
  bool converged = false;                    // stopped on the loss threshold
  std::vector<std::string> warnings;
};

/// Data loss per labelled time point over pieces tiling every trajectory
/// (whole trajectories when hidden states are present).
double per_sample_loss(const Dataset& dataset, const FittedModel& fitted,
                       const IntegratorConfig& integrator, std::size_t segment_length,
                       int threads = 1);

using ProgressCallback = std::function<void(const LogRecord&)>;

/// The training loop: sample a batch, evaluate loss and exact gradients, take
/// an Adam step on θ (plus the offsets touched by the batch and hidden
/// initial values), prune below γ every `threshold_period` iterations, and
/// stop on the smoothed loss threshold or the iteration budget.
FittedModel train(const Dataset& dataset, const PolynomialBasis& basis,
                  const CoefficientMatrix& structure, const TrainConfig& config,
                  const ProgressCallback& progress = {});

}  // namespace odenet
