#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <memory>
#include <optional>
#include <vector>

#include "koopmpc/boxqp/problem.hpp"

namespace koopmpc::boxqp {

/// Width of the central-path neighborhood the iterates stay inside.
inline constexpr double kNeighborhoodRadius = 0.25;

/// Per-iteration duality-measure decay constant: after one predictor-corrector
/// round, mu shrinks by at least (1 - kContractionConstant / sqrt(2 n))^2.
inline constexpr double kContractionConstant = 0.2348;

/// Strictly interior primal-dual point for the box QP in scaled form.  The
/// objective is rescaled by lambda = 1 / (4 sqrt(2) ||h||) so that the
/// all-ones dual start lands inside the central-path neighborhood; z itself
/// is a point of the original problem (the box and the minimizer are
/// invariant under positive objective scaling).
///
/// Stationarity couples the blocks as  2 lambda (H z + h) + gamma - theta = 0
/// with slacks  phi = 1 - z  and  psi = 1 + z;  gamma and theta are the
/// multipliers of the upper and lower bound rows.
struct IpmIterate {
  Eigen::VectorXd z;      ///< primal point, strictly inside [-1, 1]^n
  Eigen::VectorXd gamma;  ///< upper-bound multipliers, > 0
  Eigen::VectorXd theta;  ///< lower-bound multipliers, > 0
  Eigen::VectorXd phi;    ///< upper slacks 1 - z, > 0
  Eigen::VectorXd psi;    ///< lower slacks 1 + z, > 0
  double lambda = 0.0;    ///< objective scaling, > 0

  Eigen::Index dim() const { return z.size(); }

  /// Complementarity gap v^T s = gamma^T phi + theta^T psi.
  double gap() const { return gamma.dot(phi) + theta.dot(psi); }

  /// Duality measure mu = gap / (2 n).
  double duality_measure() const { return gap() / static_cast<double>(2 * dim()); }
};

/// Distance of an iterate from the central path, relative to its duality
/// measure: || [gamma.*phi; theta.*psi] - mu 1 ||_2 / mu.  Iterates produced
/// by the solver keep this at or below kNeighborhoodRadius.
double neighborhood_residual(const IpmIterate& iterate);

/// Number of predictor-corrector iterations that provably reduce the initial
/// gap of 2n to at most epsilon:
///   ceil( log(2 n / epsilon) / (-2 log(1 - kContractionConstant / sqrt(2 n))) )
/// evaluated in double precision with natural logarithms.  Requires
/// 0 < epsilon < 2 n.
int certified_iteration_bound(Eigen::Index n, double epsilon);

/// Builds the scaled starting point: z = 0, phi = psi = 1, and
/// gamma = 1 - lambda h, theta = 1 + lambda h with lambda = 1/(4 sqrt(2) ||h||).
/// Its duality measure is exactly 1 and its neighborhood residual exactly
/// kNeighborhoodRadius.  Returns std::nullopt when h = 0, in which case z = 0
/// is already the minimizer and no iterations are needed.
std::optional<IpmIterate> initialize(const BoxQpProblem& problem);

/// Primal-dual Newton direction at an iterate.  dphi = -dz and dpsi = dz are
/// stored explicitly so step-size and curvature logic can treat the slack
/// block uniformly.
struct NewtonDirections {
  Eigen::VectorXd dz;
  Eigen::VectorXd dgamma;
  Eigen::VectorXd dtheta;
  Eigen::VectorXd dphi;
  Eigen::VectorXd dpsi;

  /// dv^T ds = dgamma^T dphi + dtheta^T dpsi.  Equals dz^T (2 lambda H) dz,
  /// hence nonnegative for a convex problem.
  double curvature() const { return dgamma.dot(dphi) + dtheta.dot(dpsi); }
};

/// Centering weight of a Newton step: the predictor aims at the pure
/// complementarity target (sigma = 0), the corrector re-centers toward
/// sigma * mu (sigma = 1).
enum class StepKind { predictor, corrector };

/// Factorization backend for the condensed Newton system
///   (2 lambda H + diag(gamma./phi + theta./psi)) dz = r.
/// One factorization serves both the solve of the step equation and any
/// residual refinement at the same iterate.  Instances own their workspace
/// and must not be shared across threads.
class NewtonBackend {
public:
  virtual ~NewtonBackend() = default;

  /// Forms and factors the condensed coefficient matrix at `iterate`.
  /// Throws NumericalBreakdown if the factorization fails.
  virtual void factorize(const IpmIterate& iterate) = 0;

  /// Overwrites `rhs` with the solution of the factored system.
  virtual void solve_in_place(Eigen::Ref<Eigen::VectorXd> rhs) const = 0;
};

/// Dense backend: materializes the n x n condensed matrix and Cholesky-factors
/// it (O(n^3) per factorization).
class DenseNewtonBackend final : public NewtonBackend {
public:
  explicit DenseNewtonBackend(const BoxQpProblem& problem);
  void factorize(const IpmIterate& iterate) override;
  void solve_in_place(Eigen::Ref<Eigen::VectorXd> rhs) const override;

private:
  Eigen::MatrixXd hessian_;  // dense H (expanded once if the problem is structured)
  Eigen::MatrixXd matrix_;   // condensed coefficient matrix at the current iterate
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Structured backend for KoopmanHessian problems.  Eliminates the state
/// block, whose coefficient matrix is diagonal, and Cholesky-factors only the
/// input-block Schur complement
///   S = 2 lambda (input_block + rho F^T F) + D_U - c^2 F^T D_X^{-1} F,
///     c = 2 lambda rho,
/// which it assembles as  2 lambda input_block + D_U + F^T diag(g) F  with
/// g = c (d_X - c) ./ d_X  > 0,  d_X the state-block diagonal.  Cost per
/// factorization is O(state_dim * input_dim^2) instead of O(dim^3).
class StructuredNewtonBackend final : public NewtonBackend {
public:
  explicit StructuredNewtonBackend(const BoxQpProblem& problem);
  void factorize(const IpmIterate& iterate) override;
  void solve_in_place(Eigen::Ref<Eigen::VectorXd> rhs) const override;

private:
  const KoopmanHessian* hessian_ = nullptr;
  double coupling_ = 0.0;              // c = 2 lambda rho
  Eigen::VectorXd barrier_;            // gamma./phi + theta./psi
  Eigen::VectorXd state_diag_;         // d_X
  Eigen::VectorXd schur_weights_;      // g
  Eigen::MatrixXd weighted_response_;  // diag(g) F
  Eigen::MatrixXd schur_;              // S
  Eigen::LLT<Eigen::MatrixXd> llt_;
  mutable Eigen::VectorXd scratch_state_;
  mutable Eigen::VectorXd scratch_input_;
};

/// Picks the backend matching the hessian storage form; `force_dense`
/// expands a structured problem through the dense path (reference/testing).
std::unique_ptr<NewtonBackend> make_newton_backend(const BoxQpProblem& problem,
                                                   bool force_dense = false);

/// Solves the condensed Newton system at `iterate` for centering target
/// sigma(kind) * mu and recovers the dual and slack blocks.  Convenience
/// entry point that builds a fresh backend; the solver loop reuses one.
NewtonDirections newton_direction(const IpmIterate& iterate, const BoxQpProblem& problem,
                                  StepKind kind, double mu);

/// Adaptive predictor step length
///   alpha = min(1/2, sqrt(mu / (8 || dv.*ds - dmu 1 ||)))
/// with dmu = dv^T ds / (2 n); returns 1/2 when the deviation norm vanishes.
/// dv stacks (dgamma, dtheta) and ds stacks (dphi, dpsi).
double predictor_step_size(double mu, const Eigen::VectorXd& dv, const Eigen::VectorXd& ds);

struct SolveOptions {
  /// Expand a structured hessian and run the dense backend.
  bool force_dense = false;
  /// One residual-refinement pass on each Newton solve (reuses the existing
  /// factorization).  Off by default: the certified path does not need it.
  bool iterative_refinement = false;
};

/// Outcome of a solve together with the diagnostics the certification is
/// stated in terms of.
struct SolveReport {
  Eigen::VectorXd z_star;              ///< minimizer estimate
  int iterations = 0;                  ///< predictor-corrector rounds used
  int certified_bound = 0;             ///< a-priori iteration certificate
  double final_gap = 0.0;              ///< v^T s at exit
  std::vector<double> mu_trace;        ///< duality measure at each loop head (and at exit)
  std::vector<double> contraction;     ///< mu_{k+1} / mu_k per round
  double min_curvature = 0.0;          ///< smallest dv^T ds seen across all directions
  double max_neighborhood_residual = 0.0;  ///< largest post-corrector residual
  double wall_time_seconds = 0.0;

  /// True when final_gap <= the epsilon the solve was run with.
  bool converged = false;
};

/// Feasible predictor-corrector interior-point solver for BoxQpProblem.
/// Holds the Newton backend and all iteration workspace, so a receding-
/// horizon loop can rebuild the linear term and call solve() repeatedly
/// without reallocating.  Not thread-safe; use one instance per thread.
class IpmSolver {
public:
  explicit IpmSolver(const BoxQpProblem& problem, SolveOptions options = {});

  /// Runs predictor-corrector rounds until gap <= epsilon or the certified
  /// bound is exhausted (the report's `converged` flag tells which).  Throws
  /// NumericalBreakdown if a factorization fails or strict interiority is
  /// lost, and std::invalid_argument for epsilon outside (0, 2 n).
  SolveReport solve(double epsilon);

  const BoxQpProblem& problem() const { return problem_; }

private:
  void compute_directions(const IpmIterate& iterate, StepKind kind, double mu,
                          NewtonDirections& out);

  const BoxQpProblem& problem_;
  SolveOptions options_;
  std::unique_ptr<NewtonBackend> backend_;
  IpmIterate iterate_;
  NewtonDirections directions_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd refine_scratch_;
};

/// One-shot convenience wrapper around IpmSolver.
SolveReport solve(const BoxQpProblem& problem, double epsilon, SolveOptions options = {});

}  // namespace koopmpc::boxqp
