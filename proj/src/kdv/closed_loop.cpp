#include "koopmpc/kdv/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "koopmpc/boxqp/solver.hpp"
#include "koopmpc/koopman/lift.hpp"
#include "koopmpc/mpc/condense.hpp"
#include "koopmpc/util/rng.hpp"

namespace koopmpc::kdv {
namespace {

constexpr int kFourierModes = 3;

// Smooth periodic initial profile: a few sine modes with random phases and
// amplitudes that shrink with the mode number, keeping |y| around unity.
void random_initial_profile(const Eigen::VectorXd& grid, double half_length, util::Rng& rng,
                            Eigen::Ref<Eigen::VectorXd> out) {
  std::uniform_real_distribution<double> amplitude(-0.4, 0.4);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  out.setZero();
  for (int mode = 1; mode <= kFourierModes; ++mode) {
    const double a = amplitude(rng) / static_cast<double>(mode);
    const double p = phase(rng);
    out.array() += a * ((static_cast<double>(mode) * M_PI / half_length) * grid.array() + p).sin();
  }
}

}  // namespace

DatasetResult generate_dataset(const KdvConfig& config, int n_trajectories,
                               int trajectory_length, uint64_t seed) {
  if (n_trajectories < 1 || trajectory_length < 2) {
    throw std::invalid_argument(
        "generate_dataset: need at least one trajectory of length at least 2");
  }
  KdvPlant plant(config);
  const Eigen::Index n_x = config.n_grid;
  const Eigen::Index n_u = config.n_forcing;
  const Eigen::Index samples_per_trajectory = trajectory_length - 1;

  DatasetResult result;
  result.snapshots.states.resize(n_trajectories * samples_per_trajectory, n_x);
  result.snapshots.inputs.resize(n_trajectories * samples_per_trajectory, n_u);
  result.snapshots.next_states.resize(n_trajectories * samples_per_trajectory, n_x);

  Eigen::VectorXd state(n_x);
  Eigen::VectorXd input(n_u);
  const int max_attempts_per_trajectory = 100;

  for (int trajectory = 0; trajectory < n_trajectories; ++trajectory) {
    bool accepted = false;
    for (int attempt = 0; attempt < max_attempts_per_trajectory && !accepted; ++attempt) {
      // Substream per (trajectory, attempt): discarded attempts do not shift
      // any other trajectory's draws.
      util::Rng rng(util::derive_seed(
          seed, static_cast<uint64_t>(trajectory) |
                    (static_cast<uint64_t>(attempt) << 32)));
      std::uniform_real_distribution<double> input_draw(-1.0, 1.0);

      random_initial_profile(plant.grid(), config.domain_half_length, rng, state);
      const Eigen::Index base = trajectory * samples_per_trajectory;
      try {
        for (Eigen::Index k = 0; k < samples_per_trajectory; ++k) {
          for (Eigen::Index j = 0; j < n_u; ++j) {
            input[j] = input_draw(rng);
          }
          result.snapshots.states.row(base + k) = state.transpose();
          result.snapshots.inputs.row(base + k) = input.transpose();
          plant.step(state, input);
          result.snapshots.next_states.row(base + k) = state.transpose();
        }
        accepted = true;
      } catch (const BlowupError&) {
        ++result.discarded_trajectories;
      }
    }
    if (!accepted) {
      throw std::runtime_error("generate_dataset: trajectory " + std::to_string(trajectory) +
                               " blew up on every resampling attempt");
    }
  }
  return result;
}

Eigen::VectorXd sinusoidal_reference(double t, Eigen::Index n_grid, double amplitude,
                                     double period) {
  return Eigen::VectorXd::Constant(n_grid, amplitude * std::sin(2.0 * M_PI * t / period));
}

int ClosedLoopLog::max_iterations() const {
  return iterations.empty() ? 0 : *std::max_element(iterations.begin(), iterations.end());
}

ClosedLoopLog closed_loop(const KdvConfig& config, const koopman::KoopmanModel& model,
                          const mpc::NmpcSpec& spec, double duration, double epsilon,
                          const ReferenceFn& reference) {
  config.validate();
  spec.validate();
  if (model.state_dim() != config.n_grid) {
    throw std::invalid_argument("closed_loop: model state width disagrees with the grid");
  }
  if (model.input_dim() != config.n_forcing) {
    throw std::invalid_argument("closed_loop: model input width disagrees with the actuation");
  }
  if (spec.state_dim() != config.n_grid || spec.input_dim() != config.n_forcing) {
    throw std::invalid_argument("closed_loop: specification dimensions disagree with the plant");
  }
  if (!(duration > 0.0)) {
    throw std::invalid_argument("closed_loop: duration must be positive");
  }

  const ReferenceFn reference_fn =
      reference ? reference
                : ReferenceFn([n = config.n_grid](double t) { return sinusoidal_reference(t, n); });

  const Eigen::Index n_steps = static_cast<Eigen::Index>(std::llround(duration / config.dt));
  const Eigen::Index n_x = config.n_grid;
  const Eigen::Index n_u = config.n_forcing;

  KdvPlant plant(config);
  const mpc::PredictionStack stack = mpc::build_prediction_stack(model, spec.horizon);

  Eigen::VectorXd state = Eigen::VectorXd::Zero(n_x);
  Eigen::VectorXd lifted(model.lifted_dim());
  koopman::lift_into(model.lift, state, lifted);

  mpc::KoopmanBoxQp qp(spec, stack, lifted);
  boxqp::IpmSolver solver(qp.problem());

  ClosedLoopLog log;
  log.times.resize(n_steps);
  log.states.resize(n_steps, n_x);
  log.inputs.resize(n_steps, n_u);
  log.references.resize(n_steps, n_x);
  log.iterations.reserve(static_cast<size_t>(n_steps));
  log.solve_gaps.reserve(static_cast<size_t>(n_steps));

  double max_abs_state = 0.0;
  for (Eigen::Index i = 0; i < n_steps; ++i) {
    const double t = static_cast<double>(i) * config.dt;
    const Eigen::VectorXd state_ref = reference_fn(t);

    koopman::lift_into(model.lift, state, lifted);
    qp.update_linear_term(lifted, state_ref, spec.input_ref);
    const boxqp::SolveReport report = solver.solve(epsilon);

    log.certified_bound = report.certified_bound;
    log.iterations.push_back(report.iterations);
    log.solve_gaps.push_back(report.final_gap);
    log.all_converged = log.all_converged && report.converged;

    const Eigen::VectorXd input = qp.first_input(report.z_star);
    log.times[i] = t;
    log.states.row(i) = state.transpose();
    log.inputs.row(i) = input.transpose();
    log.references.row(i) = state_ref.transpose();
    max_abs_state = std::max(max_abs_state, state.cwiseAbs().maxCoeff());

    try {
      plant.step(state, input);
    } catch (const BlowupError&) {
      throw BlowupError("closed_loop: plant state became non-finite at sampling index " +
                        std::to_string(i));
    }
  }
  log.state_overshoot = std::max(0.0, max_abs_state - 1.0);
  return log;
}

}  // namespace koopmpc::kdv
