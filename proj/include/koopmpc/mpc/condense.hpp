#pragma once

#include <Eigen/Core>

#include "koopmpc/boxqp/problem.hpp"
#include "koopmpc/koopman/edmd.hpp"
#include "koopmpc/mpc/nmpc_spec.hpp"

namespace koopmpc::mpc {

/// Multi-step response of the lifted model projected to state space:
/// stacking the predictions x_{k+1} = C A^{k+1} psi_0 + sum_j C A^{k-j} B u_j
/// for k = 0..N-1 gives  X = free_response * psi_0 + forced_response * U.
struct PredictionStack {
  Eigen::MatrixXd free_response;    ///< E, (N n_x) x n_psi; row block k is C A^{k+1}
  Eigen::MatrixXd forced_response;  ///< F, (N n_x) x (N n_u); block (i,j) is C A^{i-j} B
};

PredictionStack build_prediction_stack(const koopman::KoopmanModel& model, int horizon);

/// Quadratic form of the move-suppression term sum_k ||u_k - u_{k-1}||^2_W
/// with u_{-1} = 0: block tridiagonal with diagonal blocks 2W (W in the last
/// block row) and off-diagonal blocks -W.
Eigen::MatrixXd build_move_penalty(const Eigen::VectorXd& move_weight, int horizon);

/// Condensed box QP over z = col(U, X) with the structured cost
///   H = rho [F^T F, -F^T; -F, I] + blkdiag(Wu_bar + move penalty, Wx_bar),
///   h = rho [F^T E; -E] psi_0 - [Wu_bar ur_bar; Wx_bar xr_bar].
/// E and F are folded into H once; between sampling instants only the linear
/// term depends on the measured state and the references, so a receding-
/// horizon loop calls update_linear_term and re-solves without reassembly.
class KoopmanBoxQp {
public:
  KoopmanBoxQp(const NmpcSpec& spec, const PredictionStack& stack,
               const Eigen::Ref<const Eigen::VectorXd>& lifted_state);

  boxqp::BoxQpProblem& problem() { return problem_; }
  const boxqp::BoxQpProblem& problem() const { return problem_; }

  Eigen::Index horizon() const { return horizon_; }
  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index state_dim() const { return state_dim_; }

  /// First input block of a stacked decision vector (the move a receding-
  /// horizon controller actually applies).
  Eigen::VectorXd first_input(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    return z.head(input_dim_);
  }

  /// Rebuilds h for a new lifted state and per-instant references without
  /// allocating.  Reference bounds are revalidated ([-1, 1] componentwise).
  void update_linear_term(const Eigen::Ref<const Eigen::VectorXd>& lifted_state,
                          const Eigen::Ref<const Eigen::VectorXd>& state_ref,
                          const Eigen::Ref<const Eigen::VectorXd>& input_ref);

private:
  Eigen::Index horizon_ = 0;
  Eigen::Index input_dim_ = 0;
  Eigen::Index state_dim_ = 0;
  Eigen::VectorXd state_weight_;
  Eigen::VectorXd input_weight_;
  Eigen::MatrixXd linear_map_;  // rho [F^T E; -E]
  Eigen::VectorXd scratch_;
  boxqp::BoxQpProblem problem_;
};

/// One-call assembly of the condensed instance at an initial lifted state.
KoopmanBoxQp build_boxqp(const NmpcSpec& spec, const PredictionStack& stack,
                         const Eigen::Ref<const Eigen::VectorXd>& lifted_state);

/// Same problem with the cost materialized as a dense matrix; reference path
/// for testing and for consumers without the structured solve.
boxqp::BoxQpProblem build_general_qp(const NmpcSpec& spec, const PredictionStack& stack,
                                     const Eigen::Ref<const Eigen::VectorXd>& lifted_state);

}  // namespace koopmpc::mpc
