#include "odenet/train.hpp"

#include <algorithm>
#include <cmath>

#include "odenet/error.hpp"
#include "odenet/sensitivity.hpp"
#include "odenet/sindy.hpp"

namespace odenet {

double Schedule::at(std::size_t iteration, std::size_t iterations) const {
  if (iterations <= 1 || start == end) return start;
  if (iteration + 1 >= iterations) return end;
  const double frac = static_cast<double>(iteration) / static_cast<double>(iterations - 1);
  return start * std::pow(end / start, frac);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::Config, "batch size m must be >= 1");
  if (segment_length < 1) throw Error(ErrorCode::Config, "segment length n must be >= 1");
  if (iterations < 1) throw Error(ErrorCode::Config, "iterations must be >= 1");
  if (!(mu.start > 0.0) || !(mu.end > 0.0)) throw Error(ErrorCode::Config, "mu schedule must be positive");
  if (!(gamma.start > 0.0) || !(gamma.end > 0.0)) {
    throw Error(ErrorCode::Config, "gamma schedule must be positive");
  }
  if (!(adam.learning_rate > 0.0)) throw Error(ErrorCode::Config, "learning rate must be > 0");
  if (learning_rate_end && !(*learning_rate_end > 0.0)) {
    throw Error(ErrorCode::Config, "final learning rate must be > 0");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw Error(ErrorCode::Config, "Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw Error(ErrorCode::Config, "Adam epsilon must be > 0");
  if (threshold_period < 1) throw Error(ErrorCode::Config, "threshold_period must be >= 1");
  if (!(noise_scale >= 0.0)) throw Error(ErrorCode::Config, "noise_scale must be >= 0");
  if (!(elongation_guess > 0.0)) throw Error(ErrorCode::Config, "elongation_guess must be > 0");
  if (log_every < 1) throw Error(ErrorCode::Config, "log_every must be >= 1");
  if (threads < 1) throw Error(ErrorCode::Config, "threads must be >= 1");
  integrator.validate();
}

AdamState::AdamState(Eigen::Index size)
    : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)),
      steps(static_cast<std::size_t>(size), 0) {}

namespace {

inline void adam_entry(double& param, double grad, double& m, double& v, std::uint64_t& steps,
                       const AdamSettings& s) {
  ++steps;
  m = s.beta1 * m + (1.0 - s.beta1) * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad * grad;
  const double t = static_cast<double>(steps);
  const double m_hat = m / (1.0 - std::pow(s.beta1, t));
  const double v_hat = v / (1.0 - std::pow(s.beta2, t));
  param -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
}

}  // namespace

void adam_update(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
                 AdamState& state, const AdamSettings& settings, const std::vector<bool>& mask) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw Error(ErrorCode::InvalidDimension, "Adam parameter, gradient and state sizes differ");
  }
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    if (!mask.empty() && !mask[static_cast<std::size_t>(i)]) continue;
    adam_entry(params[i], grads[i], state.m[i], state.v[i], state.steps[static_cast<std::size_t>(i)],
               settings);
  }
}

Batch sample_batch(const Dataset& dataset, std::size_t m, std::size_t n, std::mt19937_64& rng) {
  // Valid starts per trajectory; counts are cumulated so the draw is uniform
  // over all (trajectory, start) pairs.
  std::vector<std::size_t> cumulative;
  std::size_t total = 0;
  for (const Trajectory& t : dataset.trajectories) {
    std::size_t starts = 0;
    if (t.samples() >= n + 1) starts = t.has_hidden() ? 1 : t.samples() - n;
    total += starts;
    cumulative.push_back(total);
  }
  if (total == 0) {
    throw Error(ErrorCode::Config, "no trajectory has the " + std::to_string(n + 1) +
                                       " samples a batch piece needs");
  }
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  Batch batch;
  batch.segment_length = n;
  batch.pieces.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t r = pick(rng);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    const auto traj = static_cast<std::size_t>(it - cumulative.begin());
    const std::size_t before = traj == 0 ? 0 : cumulative[traj - 1];
    batch.pieces.push_back(BatchPiece{traj, r - before});
  }
  return batch;
}

CoefficientMatrix initialize_theta(const Dataset& dataset, const PolynomialBasis& basis,
                                   const CoefficientMatrix& structure, InitStrategy strategy,
                                   std::mt19937_64& rng, std::string* warning) {
  if (dataset.trajectories.empty()) throw Error(ErrorCode::InsufficientData, "dataset is empty");
  CoefficientMatrix theta = structure;
  const auto params = theta.free_parameters();
  Eigen::VectorXd values(static_cast<Eigen::Index>(params.size()));

  if (strategy == InitStrategy::FromStructure) return theta;
  if (strategy == InitStrategy::RegressionWarmStart && dataset.has_hidden()) {
    if (warning) {
      *warning = "regression warm start needs observed derivatives of every state; "
                 "using random initial coefficients";
    }
    strategy = InitStrategy::RandomSmall;
  }
  if (strategy == InitStrategy::RegressionWarmStart) {
    const StlsqResult ls = stlsq(build_regression_problem(dataset, basis), 0.0, 1);
    for (std::size_t k = 0; k < params.size(); ++k) {
      values[static_cast<Eigen::Index>(k)] = ls.coefficients.value(params[k].entry.row, params[k].entry.col);
    }
  } else {
    std::uniform_real_distribution<double> uniform(-0.1, 0.1);
    for (Eigen::Index k = 0; k < values.size(); ++k) values[k] = uniform(rng);
  }
  theta.set_free_values(values);
  return theta;
}

double estimate_hidden_initial(const Trajectory& trajectory, int mass_dim, double elongation_guess,
                               double floor) {
  if (!trajectory.conserved_total) {
    throw Error(ErrorCode::DegenerateData, "hidden initial estimate needs a conserved total");
  }
  if (trajectory.samples() < 2) throw Error(ErrorCode::InsufficientData, "need two samples");
  const double m0 = *trajectory.conserved_total - trajectory.values(0, mass_dim);
  if (!(m0 > 0.0)) {
    throw Error(ErrorCode::DegenerateData, "monomer concentration at t0 must be positive");
  }
  const double slope = (trajectory.values(1, mass_dim) - trajectory.values(0, mass_dim)) /
                       (trajectory.grid[1] - trajectory.grid[0]);
  return std::max(floor, slope / (elongation_guess * m0));
}

namespace {

std::vector<int> hidden_dims_of(const Dataset& dataset) {
  std::vector<int> dims;
  const auto mask = dataset.observed();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) dims.push_back(static_cast<int>(i));
  }
  return dims;
}

std::string entry_label(const ODEModel& model, Entry e) {
  return "d" + model.state_names()[static_cast<std::size_t>(e.row)] + "/dt: " +
         model.basis().term_label(static_cast<std::size_t>(e.col), model.state_names());
}

}  // namespace

double per_sample_loss(const Dataset& dataset, const FittedModel& fitted,
                       const IntegratorConfig& integrator, std::size_t segment_length, int threads) {
  double loss = 0.0;
  std::size_t labels = 0;
  for (std::size_t t = 0; t < dataset.trajectories.size(); ++t) {
    const Trajectory& traj = dataset.trajectories[t];
    Batch batch;
    if (traj.has_hidden()) {
      batch.segment_length = traj.samples() - 1;
      batch.pieces.push_back(BatchPiece{t, 0});
    } else {
      batch.segment_length = std::min(segment_length, traj.samples() - 1);
      for (std::size_t s = 0; s + batch.segment_length < traj.samples(); s += batch.segment_length) {
        batch.pieces.push_back(BatchPiece{t, s});
      }
    }
    LossInputs in;
    in.dataset = &dataset;
    in.model = &fitted.model;
    in.noise = fitted.noise ? &*fitted.noise : nullptr;
    in.hidden_init = fitted.hidden_init.empty() ? nullptr : &fitted.hidden_init;
    in.integrator = integrator;
    in.threads = threads;
    const BatchGradient g = loss_and_gradient(batch, in);
    loss += g.data_loss;
    labels += batch.pieces.size() * batch.segment_length;
  }
  return labels == 0 ? 0.0 : loss / static_cast<double>(labels);
}

FittedModel train(const Dataset& dataset, const PolynomialBasis& basis,
                  const CoefficientMatrix& structure, const TrainConfig& config,
                  const ProgressCallback& progress) {
  config.validate();
  dataset.validate();
  const int d = dataset.dimension();
  if (basis.dimension() != d) throw Error(ErrorCode::BasisMismatch, "basis dimension does not match data");
  if (structure.rows() != d || static_cast<std::size_t>(structure.cols()) != basis.size()) {
    throw Error(ErrorCode::BasisMismatch, "coefficient structure does not match basis");
  }
  const auto names = dataset.state_names.empty() ? default_state_names(d) : dataset.state_names;
  const auto cols = static_cast<Eigen::Index>(basis.size());

  std::mt19937_64 rng(config.seed);
  std::string warning;
  FittedModel fit{ODEModel(basis, initialize_theta(dataset, basis, structure, config.init, rng, &warning), names),
                  std::nullopt, {}, {}, {}, {}, 0, 0.0, false, {}};
  if (!warning.empty()) fit.warnings.push_back(warning);
  CoefficientMatrix& theta = fit.model.theta();

  // Offsets are optimized in units of the expected noise level so that one
  // learning rate suits every dimension.
  Eigen::VectorXd noise_unit;
  std::vector<AdamState> noise_adam;
  if (config.learn_noise) {
    fit.noise = initialize_noise_field(dataset, config.noise_scale);
    noise_unit = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(fit.noise->observed_dims.size()));
    for (std::size_t c = 0; c < fit.noise->observed_dims.size(); ++c) {
      const double ref = fit.noise->scale_reference[fit.noise->observed_dims[c]];
      const double unit = (config.noise_scale > 0.0 ? config.noise_scale : 1.0) * ref;
      if (unit > 0.0) noise_unit[static_cast<Eigen::Index>(c)] = unit;
    }
    for (const auto& off : fit.noise->offsets) noise_adam.emplace_back(off.size());
  }

  // Hidden initial values are optimized relative to their first estimate.
  const std::vector<int> hidden = hidden_dims_of(dataset);
  std::vector<Eigen::VectorXd> hidden_unit;
  std::vector<AdamState> hidden_adam;
  if (!hidden.empty()) {
    const auto obs = dataset.trajectories.front().observed_dims();
    for (const Trajectory& traj : dataset.trajectories) {
      Eigen::VectorXd h0(static_cast<Eigen::Index>(hidden.size()));
      for (Eigen::Index c = 0; c < h0.size(); ++c) {
        h0[c] = (traj.conserved_total && !obs.empty())
                    ? estimate_hidden_initial(traj, obs.front(), config.elongation_guess)
                    : 1e-3;
      }
      fit.hidden_init.push_back(h0);
      hidden_unit.push_back(h0.cwiseAbs().cwiseMax(1e-12));
      hidden_adam.emplace_back(h0.size());
    }
  }

  AdamState theta_adam(static_cast<Eigen::Index>(d) * cols);
  const double ema_alpha = 1.0 - std::pow(0.5, 1.0 / 50.0);
  const Schedule lr_schedule{config.adam.learning_rate,
                             config.learning_rate_end.value_or(config.adam.learning_rate)};
  std::size_t consecutive_failures = 0;
  double ema = 0.0;
  bool have_ema = false;

  // Last state whose batch integrated cleanly; restored with a smaller step
  // when a whole batch fails.
  struct Snapshot {
    CoefficientMatrix theta;
    std::optional<NoiseField> noise;
    std::vector<Eigen::VectorXd> hidden;
    AdamState theta_adam;
    std::vector<AdamState> noise_adam, hidden_adam;
  };
  std::optional<Snapshot> good;
  double step_scale = 1.0;

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const double mu = config.mu.at(it, config.iterations);
    const double gamma = config.gamma.at(it, config.iterations);
    AdamSettings step = config.adam;
    step.learning_rate = lr_schedule.at(it, config.iterations) * step_scale;
    AdamSettings noise_step = step;
    if (config.noise_learning_rate > 0.0) {
      noise_step.learning_rate =
          config.noise_learning_rate * step.learning_rate / config.adam.learning_rate;
    }

    const Batch batch = sample_batch(dataset, config.batch_size, config.segment_length, rng);
    LossInputs in;
    in.dataset = &dataset;
    in.model = &fit.model;
    in.noise = fit.noise ? &*fit.noise : nullptr;
    in.hidden_init = fit.hidden_init.empty() ? nullptr : &fit.hidden_init;
    in.mu = mu;
    in.integrator = config.integrator;
    in.threads = config.threads;
    const BatchGradient g = loss_and_gradient(batch, in);
    fit.loss_history.push_back(g.loss);

    if (g.failed_pieces == batch.pieces.size()) {
      fit.iterations_run = it + 1;
      if (++consecutive_failures >= 50) {
        throw Error(ErrorCode::TrainingDiverged,
                    "every batch piece failed to integrate for 50 consecutive iterations (last: " +
                        (g.failures.empty() ? std::string("?") : g.failures.back()) + ")");
      }
      if (good) {
        theta = good->theta;
        fit.noise = good->noise;
        fit.hidden_init = good->hidden;
        theta_adam = good->theta_adam;
        noise_adam = good->noise_adam;
        hidden_adam = good->hidden_adam;
      }
      step_scale *= 0.5;
      continue;
    }
    consecutive_failures = 0;
    ema = have_ema ? ema + ema_alpha * (g.loss - ema) : g.loss;
    have_ema = true;
    if (g.failed_pieces == 0) {
      good = Snapshot{theta, fit.noise, fit.hidden_init, theta_adam, noise_adam, hidden_adam};
      step_scale = std::min(1.0, step_scale * 1.01);
    }

    // θ: dense Adam state indexed by matrix entry; only free entries move.
    const auto params = theta.free_parameters();
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(d * cols);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d * cols);
    std::vector<bool> mask(static_cast<std::size_t>(d * cols), false);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const Eigen::Index idx = params[k].entry.row * cols + params[k].entry.col;
      flat[idx] = theta.value(params[k].entry.row, params[k].entry.col);
      grad[idx] = g.grad_theta[static_cast<Eigen::Index>(k)];
      mask[static_cast<std::size_t>(idx)] = true;
    }
    adam_update(flat, grad, theta_adam, step, mask);
    Eigen::VectorXd free(static_cast<Eigen::Index>(params.size()));
    for (std::size_t k = 0; k < params.size(); ++k) {
      free[static_cast<Eigen::Index>(k)] = flat[params[k].entry.row * cols + params[k].entry.col];
    }
    theta.set_free_values(free);

    // Offsets: sparse update of the samples this batch touched.
    if (fit.noise) {
      for (const auto& [key, gv] : g.grad_noise) {
        const auto [traj, sample] = key;
        Eigen::MatrixXd& off = fit.noise->offsets[traj];
        AdamState& st = noise_adam[traj];
        for (Eigen::Index c = 0; c < gv.size(); ++c) {
          const Eigen::Index idx = static_cast<Eigen::Index>(sample) * off.cols() + c;
          const double unit = noise_unit[c];
          double z = off(static_cast<Eigen::Index>(sample), c) / unit;
          adam_entry(z, gv[c] * unit, st.m[idx], st.v[idx], st.steps[static_cast<std::size_t>(idx)], noise_step);
          off(static_cast<Eigen::Index>(sample), c) = z * unit;
        }
      }
    }
    if (config.learn_hidden) {
      for (const auto& [traj, gv] : g.grad_hidden) {
        Eigen::VectorXd& h = fit.hidden_init[traj];
        AdamState& st = hidden_adam[traj];
        for (Eigen::Index c = 0; c < gv.size(); ++c) {
          const double unit = hidden_unit[traj][c];
          double z = h[c] / unit;
          adam_entry(z, gv[c] * unit, st.m[c], st.v[c], st.steps[static_cast<std::size_t>(c)], step);
          h[c] = z * unit;
        }
      }
    }

    if ((it + 1) % config.threshold_period == 0) {
      for (const Entry& e : theta.apply_threshold(gamma)) {
        fit.prune_events.push_back(PruneEvent{it + 1, e, entry_label(fit.model, e)});
      }
    }

    fit.iterations_run = it + 1;
    fit.final_smoothed_loss = ema;
    if (it % config.log_every == 0 || it + 1 == config.iterations) {
      LogRecord rec{it + 1, ema, theta.active_count(), mu, gamma};
      fit.log.push_back(rec);
      if (progress) progress(rec);
    }
    if (config.loss_threshold > 0.0 && ema < config.loss_threshold) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

}  // namespace odenet
