#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace koopmpc::koopman {

/// Observable dictionary: the state itself followed by thin-plate radial
/// basis functions
///   phi_i(x) = r_i^2 log(r_i),   r_i = ||x - c_i||_2,
/// evaluated as (1/2) s log(s) with s = r^2 (and 0 at r = 0).  Keeping the
/// state as the leading block makes the projection back to state space a
/// plain prefix read.
struct LiftSpec {
  Eigen::Index state_dim = 0;
  Eigen::MatrixXd centers;  ///< one center per row, n_rbf() x state_dim

  Eigen::Index n_rbf() const { return centers.rows(); }
  Eigen::Index lifted_dim() const { return state_dim + n_rbf(); }
};

/// Evaluates the dictionary at one state without allocating; `out` must have
/// length lifted_dim().
void lift_into(const LiftSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
               Eigen::Ref<Eigen::VectorXd> out);

Eigen::VectorXd lift(const LiftSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Lifts a batch of states (one per row) in a single pass; the pairwise
/// distance part is evaluated as one matrix product.
Eigen::MatrixXd lift_rows(const LiftSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& states);

/// Draws center coordinates i.i.d. uniform from [lo, hi], reproducibly from
/// the seed.  Entries are drawn row by row (center by center).
Eigen::MatrixXd sample_rbf_centers(Eigen::Index n_rbf, Eigen::Index state_dim, double lo,
                                   double hi, uint64_t seed);

}  // namespace koopmpc::koopman
