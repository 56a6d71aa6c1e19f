#include "koopmpc/mpc/condense.hpp"

#include <stdexcept>
#include <string>

namespace koopmpc::mpc {
namespace {

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw std::invalid_argument(message);
  }
}

void require_in_unit_box(const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& name) {
  require(v.allFinite() && v.minCoeff() >= -1.0 && v.maxCoeff() <= 1.0,
          name + " must lie inside [-1, 1]");
}

// Tiles `rho [F^T E; -E]`, the map from the lifted state to the linear term's
// state-dependent part.
Eigen::MatrixXd build_linear_map(const PredictionStack& stack, double rho) {
  const Eigen::Index n_inputs = stack.forced_response.cols();
  const Eigen::Index n_states = stack.free_response.rows();
  Eigen::MatrixXd map(n_inputs + n_states, stack.free_response.cols());
  map.topRows(n_inputs).noalias() =
      rho * (stack.forced_response.transpose() * stack.free_response);
  map.bottomRows(n_states) = -rho * stack.free_response;
  return map;
}

boxqp::KoopmanHessian build_structured_hessian(const NmpcSpec& spec,
                                               const PredictionStack& stack) {
  const int horizon = spec.horizon;
  const Eigen::Index n_u = spec.input_dim();
  const Eigen::Index n_x = spec.state_dim();
  require(stack.free_response.rows() == horizon * n_x &&
              stack.forced_response.rows() == horizon * n_x &&
              stack.forced_response.cols() == horizon * n_u,
          "prediction stack dimensions disagree with the horizon specification");

  boxqp::KoopmanHessian hessian;
  hessian.forced_response = stack.forced_response;
  hessian.rho = spec.rho;
  hessian.input_block = build_move_penalty(spec.move_weight, horizon);
  for (int k = 0; k < horizon; ++k) {
    hessian.input_block.diagonal().segment(k * n_u, n_u) += spec.input_weight;
  }
  hessian.state_diag = spec.state_weight.replicate(horizon, 1);
  return hessian;
}

}  // namespace

void NmpcSpec::validate() const {
  require(horizon >= 1, "horizon must be at least 1");
  require(rho > 0.0, "rho must be positive");
  require(state_weight.size() >= 1 && input_weight.size() >= 1,
          "state and input dimensions must be at least 1");
  require((state_weight.array() > 0.0).all(), "state weights must be strictly positive");
  require((input_weight.array() > 0.0).all(), "input weights must be strictly positive");
  require(move_weight.size() == input_weight.size(),
          "move-suppression weight length disagrees with the input dimension");
  require((move_weight.array() >= 0.0).all(), "move-suppression weights must be nonnegative");
  require(state_ref.size() == state_weight.size(),
          "state reference length disagrees with the state dimension");
  require(input_ref.size() == input_weight.size(),
          "input reference length disagrees with the input dimension");
  require_in_unit_box(state_ref, "state reference");
  require_in_unit_box(input_ref, "input reference");
}

PredictionStack build_prediction_stack(const koopman::KoopmanModel& model, int horizon) {
  require(horizon >= 1, "build_prediction_stack: horizon must be at least 1");
  const Eigen::Index n_x = model.state_dim();
  const Eigen::Index n_u = model.input_dim();
  const Eigen::Index n_psi = model.lifted_dim();

  PredictionStack stack;
  stack.free_response.resize(horizon * n_x, n_psi);
  stack.forced_response = Eigen::MatrixXd::Zero(horizon * n_x, horizon * n_u);

  // Powers applied incrementally: transition_power = A^{k+1},
  // forced_columns = A^k B; only their leading n_x rows enter the stack.
  Eigen::MatrixXd transition_power = model.transition;
  Eigen::MatrixXd forced_columns = model.input_map;
  Eigen::MatrixXd next;
  for (int k = 0; k < horizon; ++k) {
    stack.free_response.middleRows(k * n_x, n_x) = transition_power.topRows(n_x);
    for (int i = k; i < horizon; ++i) {
      // Block (i, i - k) = C A^k B for every diagonal at offset k.
      stack.forced_response.block(i * n_x, (i - k) * n_u, n_x, n_u) =
          forced_columns.topRows(n_x);
    }
    if (k + 1 < horizon) {
      next.noalias() = model.transition * transition_power;
      transition_power.swap(next);
      next.noalias() = model.transition * forced_columns;
      forced_columns.swap(next);
    }
  }
  return stack;
}

Eigen::MatrixXd build_move_penalty(const Eigen::VectorXd& move_weight, int horizon) {
  require(horizon >= 1, "build_move_penalty: horizon must be at least 1");
  const Eigen::Index n_u = move_weight.size();
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(horizon * n_u, horizon * n_u);
  for (int k = 0; k < horizon; ++k) {
    const double diagonal_scale = (k + 1 < horizon) ? 2.0 : 1.0;
    penalty.diagonal().segment(k * n_u, n_u) = diagonal_scale * move_weight;
    if (k + 1 < horizon) {
      penalty.diagonal(n_u).segment(k * n_u, n_u) = -move_weight;
      penalty.diagonal(-n_u).segment(k * n_u, n_u) = -move_weight;
    }
  }
  return penalty;
}

KoopmanBoxQp::KoopmanBoxQp(const NmpcSpec& spec, const PredictionStack& stack,
                           const Eigen::Ref<const Eigen::VectorXd>& lifted_state)
    : horizon_(spec.horizon),
      input_dim_(spec.input_dim()),
      state_dim_(spec.state_dim()),
      state_weight_(spec.state_weight),
      input_weight_(spec.input_weight),
      linear_map_((spec.validate(), build_linear_map(stack, spec.rho))),
      scratch_(linear_map_.rows()),
      problem_(build_structured_hessian(spec, stack),
               Eigen::VectorXd::Zero(linear_map_.rows())) {
  update_linear_term(lifted_state, spec.state_ref, spec.input_ref);
}

void KoopmanBoxQp::update_linear_term(const Eigen::Ref<const Eigen::VectorXd>& lifted_state,
                                      const Eigen::Ref<const Eigen::VectorXd>& state_ref,
                                      const Eigen::Ref<const Eigen::VectorXd>& input_ref) {
  require(lifted_state.size() == linear_map_.cols(),
          "lifted state length disagrees with the model");
  require(state_ref.size() == state_dim_ && input_ref.size() == input_dim_,
          "reference lengths disagree with the specification");
  require_in_unit_box(state_ref, "state reference");
  require_in_unit_box(input_ref, "input reference");

  scratch_.noalias() = linear_map_ * lifted_state;
  const Eigen::Index n_inputs = horizon_ * input_dim_;
  for (Eigen::Index k = 0; k < horizon_; ++k) {
    scratch_.segment(k * input_dim_, input_dim_).array() -=
        input_weight_.array() * input_ref.array();
    scratch_.segment(n_inputs + k * state_dim_, state_dim_).array() -=
        state_weight_.array() * state_ref.array();
  }
  problem_.set_linear_term(scratch_);
}

KoopmanBoxQp build_boxqp(const NmpcSpec& spec, const PredictionStack& stack,
                         const Eigen::Ref<const Eigen::VectorXd>& lifted_state) {
  return KoopmanBoxQp(spec, stack, lifted_state);
}

boxqp::BoxQpProblem build_general_qp(const NmpcSpec& spec, const PredictionStack& stack,
                                     const Eigen::Ref<const Eigen::VectorXd>& lifted_state) {
  KoopmanBoxQp structured(spec, stack, lifted_state);
  return boxqp::BoxQpProblem(
      boxqp::DenseHessian{structured.problem().dense_hessian()},
      structured.problem().linear_term());
}

}  // namespace koopmpc::mpc
