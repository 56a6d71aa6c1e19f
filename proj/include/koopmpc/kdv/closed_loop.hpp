#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

#include "koopmpc/kdv/plant.hpp"
#include "koopmpc/koopman/edmd.hpp"
#include "koopmpc/mpc/nmpc_spec.hpp"

namespace koopmpc::kdv {

struct DatasetResult {
  koopman::SnapshotSet snapshots;
  int discarded_trajectories = 0;  ///< blown-up trajectories that were resampled
};

/// Excites the plant with open-loop data for identification: each trajectory
/// starts from a smooth random Fourier profile (3 modes, amplitudes shrinking
/// with the mode number) and applies i.i.d. uniform inputs in [-1, 1] at
/// every step.  A trajectory of length `trajectory_length` contributes
/// trajectory_length - 1 transition samples.  Trajectories whose state blows
/// up are discarded, counted, and redrawn from a fresh substream, so the
/// result is reproducible from `seed` alone.
DatasetResult generate_dataset(const KdvConfig& config, int n_trajectories,
                               int trajectory_length, uint64_t seed);

/// Spatially constant reference profile amplitude * sin(2 pi t / period).
Eigen::VectorXd sinusoidal_reference(double t, Eigen::Index n_grid, double amplitude = 0.5,
                                     double period = 25.0);

using ReferenceFn = std::function<Eigen::VectorXd(double)>;

/// Per-instant record of a receding-horizon run.  Row i of the matrices
/// belongs to sampling instant t_i = i dt: the plant state *before* the
/// input was applied, the reference tracked at that instant, and the first
/// input block of the solved horizon.
struct ClosedLoopLog {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd references;
  std::vector<int> iterations;      ///< solver rounds per instant
  std::vector<double> solve_gaps;   ///< final gap per instant
  int certified_bound = 0;
  bool all_converged = true;
  double state_overshoot = 0.0;     ///< max(0, max |state| - 1) over the run

  int max_iterations() const;
};

/// Runs model-predictive control of the plant from rest: at every sampling
/// instant the current state is lifted, the condensed box QP's linear term
/// is rebuilt, the certified interior-point solve produces the input
/// sequence, and the first input is applied to the plant for one step.
/// The references passed to the controller are the spec's input reference
/// and `reference(t)` for the state (sinusoidal_reference defaults when the
/// function is empty).  Throws BlowupError annotated with the sampling index
/// if the plant diverges.
ClosedLoopLog closed_loop(const KdvConfig& config, const koopman::KoopmanModel& model,
                          const mpc::NmpcSpec& spec, double duration, double epsilon,
                          const ReferenceFn& reference = {});

}  // namespace koopmpc::kdv
