#pragma once

#include <Eigen/Core>

namespace koopmpc::mpc {

/// Finite-horizon tracking objective over the lifted model: diagonal state
/// and input tracking weights, diagonal move-suppression weight, and the
/// quadratic penalty `rho` that replaces the lifted dynamics equality
/// constraints.  References must respect the unit box the solver enforces.
struct NmpcSpec {
  int horizon = 0;               ///< N, number of predicted steps (>= 1)
  Eigen::VectorXd state_weight;  ///< diagonal of W_x, strictly positive
  Eigen::VectorXd input_weight;  ///< diagonal of W_u, strictly positive
  Eigen::VectorXd move_weight;   ///< diagonal of the u_k - u_{k-1} penalty, nonnegative
  Eigen::VectorXd state_ref;     ///< tracked state, inside [-1, 1]
  Eigen::VectorXd input_ref;     ///< tracked input, inside [-1, 1]
  double rho = 0.0;              ///< dynamics-relaxation penalty, > 0

  Eigen::Index state_dim() const { return state_weight.size(); }
  Eigen::Index input_dim() const { return input_weight.size(); }

  /// Throws std::invalid_argument when any of the above constraints fail.
  void validate() const;
};

}  // namespace koopmpc::mpc
