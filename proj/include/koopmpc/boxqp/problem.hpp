#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <variant>

namespace koopmpc::boxqp {

/// Thrown when a factorization or iterate update fails in a way that violates
/// the solver's working assumptions (loss of positive definiteness, loss of
/// strict interiority).  Distinct from std::invalid_argument, which flags
/// ill-formed inputs detected before any numerics run.
class NumericalBreakdown : public std::runtime_error {
public:
  explicit NumericalBreakdown(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// Explicit symmetric positive definite cost matrix.
struct DenseHessian {
  Eigen::MatrixXd matrix;
};

/// Cost matrix of a condensed multi-step tracking problem in the block form
///
///   H = rho * [ F^T F  -F^T ]  +  [ input_block      0        ]
///             [ -F      I   ]     [ 0            diag(state_diag) ]
///
/// where F maps stacked inputs to stacked predicted states, `input_block`
/// collects the input tracking and move-suppression weights, and `state_diag`
/// holds the (diagonal) state tracking weights.  The decision vector is
/// ordered col(U, X).  Kept in factored form so Newton systems can be solved
/// through a Schur complement of size input_dim() instead of dim().
struct KoopmanHessian {
  Eigen::MatrixXd forced_response;  ///< F, state_dim() x input_dim()
  Eigen::MatrixXd input_block;      ///< symmetric, input_dim() x input_dim()
  Eigen::VectorXd state_diag;       ///< strictly positive, length state_dim()
  double rho = 0.0;                 ///< dynamics-relaxation penalty, > 0

  Eigen::Index input_dim() const { return input_block.rows(); }
  Eigen::Index state_dim() const { return state_diag.size(); }
  Eigen::Index dim() const { return input_dim() + state_dim(); }

  /// Materializes the full dense matrix (used for validation and as a
  /// reference path in tests; the solver normally never expands).
  Eigen::MatrixXd expand() const;
};

using HessianForm = std::variant<DenseHessian, KoopmanHessian>;

/// Strictly convex quadratic program over the unit box,
///
///   minimize  (1/2) z^T H z + z^T h   subject to  -1 <= z <= 1.
///
/// Positive definiteness of H is verified once at construction by a Cholesky
/// factorization; a failure throws std::invalid_argument.  The linear term
/// may be replaced between solves (receding-horizon use) without revalidating
/// the cost matrix.
class BoxQpProblem {
public:
  BoxQpProblem(HessianForm hessian, Eigen::VectorXd linear_term);

  Eigen::Index dim() const { return linear_term_.size(); }
  const HessianForm& hessian() const { return hessian_; }
  const Eigen::VectorXd& linear_term() const { return linear_term_; }

  bool has_structured_hessian() const {
    return std::holds_alternative<KoopmanHessian>(hessian_);
  }

  /// Replaces h.  The new vector must have the same length; no allocation.
  void set_linear_term(const Eigen::Ref<const Eigen::VectorXd>& linear_term);

  /// y = H z, exploiting the structured form when present.
  void hessian_times(const Eigen::Ref<const Eigen::VectorXd>& z,
                     Eigen::Ref<Eigen::VectorXd> y) const;

  /// Dense copy of H regardless of storage form.
  Eigen::MatrixXd dense_hessian() const;

  /// Objective value (1/2) z^T H z + z^T h.
  double objective(const Eigen::Ref<const Eigen::VectorXd>& z) const;

private:
  HessianForm hessian_;
  Eigen::VectorXd linear_term_;
};

}  // namespace koopmpc::boxqp
