#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>

#include "koopmpc/koopman/lift.hpp"

namespace koopmpc::koopman {

/// The regression data is rank-deficient and no ridge was requested; carries
/// the offending smallest singular value in the message.
class RankDeficiencyError : public std::runtime_error {
public:
  explicit RankDeficiencyError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// Aligned one-step transition samples: row k of `next_states` is the
/// successor of row k of `states` under input row k of `inputs`.
struct SnapshotSet {
  Eigen::MatrixXd states;       // m x n_x
  Eigen::MatrixXd inputs;       // m x n_u
  Eigen::MatrixXd next_states;  // m x n_x

  Eigen::Index size() const { return states.rows(); }
  Eigen::Index state_dim() const { return states.cols(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
};

/// Linear model of the lifted dynamics,
///   psi(x_{k+1}) ~= transition * psi(x_k) + input_map * u_k,
/// with the state recovered as the leading block of the lifted vector.
struct KoopmanModel {
  LiftSpec lift;
  Eigen::MatrixXd transition;  // n_psi x n_psi
  Eigen::MatrixXd input_map;   // n_psi x n_u

  // Fitting metadata, carried for reproducibility records.
  double ridge = 0.0;
  uint64_t center_seed = 0;

  Eigen::Index state_dim() const { return lift.state_dim; }
  Eigen::Index input_dim() const { return input_map.cols(); }
  Eigen::Index lifted_dim() const { return lift.lifted_dim(); }
};

/// Least-squares fit of (transition, input_map) over the lifted snapshots,
/// through the normal equations of the regressor [psi(x); u] with Tikhonov
/// ridge on the Gram matrix.  Snapshot order does not affect the result
/// beyond floating-point accumulation order, which is fixed (row-major
/// chunks).  With ridge = 0, a rank-deficient Gram matrix raises
/// RankDeficiencyError.
KoopmanModel fit_edmd(const SnapshotSet& snapshots, const LiftSpec& lift_spec, double ridge);

/// RMS of the one-step *state* prediction error over snapshot rows
/// [begin, begin + count); the usual fit-quality summary.
double one_step_state_rms(const KoopmanModel& model, const SnapshotSet& snapshots,
                          Eigen::Index begin, Eigen::Index count);

/// Rolls the lifted dynamics forward from x0 under an input sequence (one
/// row per step) and returns the predicted states, one row per step: row k
/// holds the state predicted after k+1 steps.
Eigen::MatrixXd predict(const KoopmanModel& model, const Eigen::Ref<const Eigen::VectorXd>& x0,
                        const Eigen::Ref<const Eigen::MatrixXd>& input_sequence);

}  // namespace koopmpc::koopman
