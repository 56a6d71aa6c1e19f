#include "koopmpc/boxqp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace koopmpc::boxqp {
namespace {

double sigma_of(StepKind kind) { return kind == StepKind::predictor ? 0.0 : 1.0; }

// Right-hand side of the condensed Newton system,
//   r = sigma mu (1./psi - 1./phi) + gamma - theta,
// obtained by eliminating the dual and slack rows from the full system; the
// slack identities give dphi = -dz, dpsi = dz.
void build_rhs(const IpmIterate& it, double sigma, double mu, Eigen::VectorXd& rhs) {
  rhs = it.gamma - it.theta;
  if (sigma != 0.0) {
    rhs.array() += (sigma * mu) * (1.0 / it.psi.array() - 1.0 / it.phi.array());
  }
}

// Recovers the dual blocks from dz:
//   dgamma = sigma mu ./ phi - gamma + (gamma ./ phi) .* dz
//   dtheta = sigma mu ./ psi - theta - (theta ./ psi) .* dz
void recover_duals(const IpmIterate& it, double sigma, double mu, NewtonDirections& d) {
  d.dgamma.array() =
      (sigma * mu) / it.phi.array() - it.gamma.array() + it.gamma.array() / it.phi.array() * d.dz.array();
  d.dtheta.array() =
      (sigma * mu) / it.psi.array() - it.theta.array() - it.theta.array() / it.psi.array() * d.dz.array();
  d.dphi = -d.dz;
  d.dpsi = d.dz;
}

void resize_directions(NewtonDirections& d, Eigen::Index n) {
  d.dz.resize(n);
  d.dgamma.resize(n);
  d.dtheta.resize(n);
  d.dphi.resize(n);
  d.dpsi.resize(n);
}

double min_entry(const IpmIterate& it) {
  return std::min(std::min(it.gamma.minCoeff(), it.theta.minCoeff()),
                  std::min(it.phi.minCoeff(), it.psi.minCoeff()));
}

}  // namespace

double neighborhood_residual(const IpmIterate& it) {
  const double mu = it.duality_measure();
  const double deviation_sq =
      ((it.gamma.array() * it.phi.array()) - mu).matrix().squaredNorm() +
      ((it.theta.array() * it.psi.array()) - mu).matrix().squaredNorm();
  return std::sqrt(deviation_sq) / mu;
}

int certified_iteration_bound(Eigen::Index n, double epsilon) {
  if (n < 1) {
    throw std::invalid_argument("certified_iteration_bound: dimension must be at least 1");
  }
  const double two_n = 2.0 * static_cast<double>(n);
  if (!(epsilon > 0.0) || !(epsilon < two_n)) {
    throw std::invalid_argument("certified_iteration_bound: epsilon must lie in (0, 2n)");
  }
  // Per-round decay factor of mu is (1 - kContractionConstant / sqrt(2n))^2,
  // so the gap 2n * mu falls below epsilon after log((2n)/epsilon) divided by
  // the (positive) per-round log-decrease.  Evaluated in double precision.
  const double decay = -2.0 * std::log(1.0 - kContractionConstant / std::sqrt(two_n));
  return static_cast<int>(std::ceil(std::log(two_n / epsilon) / decay));
}

std::optional<IpmIterate> initialize(const BoxQpProblem& problem) {
  const Eigen::VectorXd& h = problem.linear_term();
  const double norm = h.norm();
  if (norm == 0.0) {
    return std::nullopt;  // z = 0 is the minimizer; nothing to iterate on
  }
  IpmIterate it;
  const Eigen::Index n = problem.dim();
  it.lambda = 1.0 / (4.0 * std::sqrt(2.0) * norm);
  it.z = Eigen::VectorXd::Zero(n);
  it.phi = Eigen::VectorXd::Ones(n);
  it.psi = Eigen::VectorXd::Ones(n);
  // |lambda h_i| <= 1/(4 sqrt(2)) < 1 keeps both multiplier blocks positive,
  // stationarity holds by construction, mu = 1, and the centrality deviation
  // is sqrt(2) ||lambda h|| = 1/4 exactly.
  it.gamma = Eigen::VectorXd::Ones(n) - it.lambda * h;
  it.theta = Eigen::VectorXd::Ones(n) + it.lambda * h;
  return it;
}

// ---------------------------------------------------------------------------
// Backends

DenseNewtonBackend::DenseNewtonBackend(const BoxQpProblem& problem)
    : hessian_(problem.dense_hessian()),
      matrix_(problem.dim(), problem.dim()),
      llt_(problem.dim()) {}

void DenseNewtonBackend::factorize(const IpmIterate& it) {
  matrix_ = (2.0 * it.lambda) * hessian_;
  matrix_.diagonal().array() +=
      it.gamma.array() / it.phi.array() + it.theta.array() / it.psi.array();
  llt_.compute(matrix_);
  if (llt_.info() != Eigen::Success) {
    throw NumericalBreakdown("dense Newton factorization failed");
  }
}

void DenseNewtonBackend::solve_in_place(Eigen::Ref<Eigen::VectorXd> rhs) const {
  llt_.solveInPlace(rhs);
}

StructuredNewtonBackend::StructuredNewtonBackend(const BoxQpProblem& problem)
    : hessian_(&std::get<KoopmanHessian>(problem.hessian())) {
  const Eigen::Index nu = hessian_->input_dim();
  const Eigen::Index nx = hessian_->state_dim();
  barrier_.resize(nu + nx);
  state_diag_.resize(nx);
  schur_weights_.resize(nx);
  weighted_response_.resize(nx, nu);
  schur_.resize(nu, nu);
  scratch_state_.resize(nx);
  scratch_input_.resize(nu);
}

void StructuredNewtonBackend::factorize(const IpmIterate& it) {
  const KoopmanHessian& k = *hessian_;
  const Eigen::Index nu = k.input_dim();
  const Eigen::Index nx = k.state_dim();
  const double two_lambda = 2.0 * it.lambda;
  coupling_ = two_lambda * k.rho;

  barrier_.array() = it.gamma.array() / it.phi.array() + it.theta.array() / it.psi.array();

  // State block of the condensed matrix is diagonal:
  //   d_X = 2 lambda (rho + w_X) + barrier_X,
  // and eliminating it reweights the coupling term of the Schur complement by
  //   g = c (d_X - c) ./ d_X  with  c = 2 lambda rho  (strictly positive).
  state_diag_.array() = two_lambda * (k.state_diag.array() + k.rho) + barrier_.tail(nx).array();
  schur_weights_.array() =
      coupling_ * (state_diag_.array() - coupling_) / state_diag_.array();

  weighted_response_.noalias() = schur_weights_.asDiagonal() * k.forced_response;
  schur_.noalias() = k.forced_response.transpose() * weighted_response_;
  schur_ += two_lambda * k.input_block;
  schur_.diagonal() += barrier_.head(nu);

  llt_.compute(schur_);
  if (llt_.info() != Eigen::Success) {
    throw NumericalBreakdown("structured Newton factorization failed (Schur complement)");
  }
}

void StructuredNewtonBackend::solve_in_place(Eigen::Ref<Eigen::VectorXd> rhs) const {
  const KoopmanHessian& k = *hessian_;
  const Eigen::Index nu = k.input_dim();
  const Eigen::Index nx = k.state_dim();

  scratch_state_.array() = rhs.tail(nx).array() / state_diag_.array();
  scratch_input_.noalias() = k.forced_response.transpose() * scratch_state_;
  rhs.head(nu) += coupling_ * scratch_input_;

  auto input_part = rhs.head(nu);
  llt_.solveInPlace(input_part);

  scratch_state_.noalias() = k.forced_response * input_part;
  rhs.tail(nx) += coupling_ * scratch_state_;
  rhs.tail(nx).array() /= state_diag_.array();
}

std::unique_ptr<NewtonBackend> make_newton_backend(const BoxQpProblem& problem,
                                                   bool force_dense) {
  if (!force_dense && problem.has_structured_hessian()) {
    return std::make_unique<StructuredNewtonBackend>(problem);
  }
  return std::make_unique<DenseNewtonBackend>(problem);
}

NewtonDirections newton_direction(const IpmIterate& it, const BoxQpProblem& problem,
                                  StepKind kind, double mu) {
  auto backend = make_newton_backend(problem);
  backend->factorize(it);
  NewtonDirections d;
  resize_directions(d, it.dim());
  Eigen::VectorXd rhs(it.dim());
  const double sigma = sigma_of(kind);
  build_rhs(it, sigma, mu, rhs);
  d.dz = rhs;
  backend->solve_in_place(d.dz);
  recover_duals(it, sigma, mu, d);
  return d;
}

double predictor_step_size(double mu, const Eigen::VectorXd& dv, const Eigen::VectorXd& ds) {
  if (dv.size() != ds.size()) {
    throw std::invalid_argument("predictor_step_size: dv and ds lengths disagree");
  }
  const double dmu = dv.dot(ds) / static_cast<double>(dv.size());
  const double deviation = ((dv.array() * ds.array()) - dmu).matrix().norm();
  if (deviation == 0.0) {
    return 0.5;
  }
  return std::min(0.5, std::sqrt(mu / (8.0 * deviation)));
}

// ---------------------------------------------------------------------------
// Solver loop

IpmSolver::IpmSolver(const BoxQpProblem& problem, SolveOptions options)
    : problem_(problem),
      options_(options),
      backend_(make_newton_backend(problem, options.force_dense)) {
  const Eigen::Index n = problem.dim();
  iterate_.z.resize(n);
  iterate_.gamma.resize(n);
  iterate_.theta.resize(n);
  iterate_.phi.resize(n);
  iterate_.psi.resize(n);
  resize_directions(directions_, n);
  rhs_.resize(n);
  refine_scratch_.resize(n);
}

void IpmSolver::compute_directions(const IpmIterate& it, StepKind kind, double mu,
                                   NewtonDirections& out) {
  const double sigma = sigma_of(kind);
  build_rhs(it, sigma, mu, rhs_);
  out.dz = rhs_;
  backend_->solve_in_place(out.dz);

  if (options_.iterative_refinement) {
    // One pass of residual correction through the existing factorization:
    // r = rhs - (2 lambda H + diag(barrier)) dz, dz += M^{-1} r.
    problem_.hessian_times(out.dz, refine_scratch_);
    refine_scratch_ *= -2.0 * it.lambda;
    refine_scratch_.array() -=
        (it.gamma.array() / it.phi.array() + it.theta.array() / it.psi.array()) *
        out.dz.array();
    refine_scratch_ += rhs_;
    backend_->solve_in_place(refine_scratch_);
    out.dz += refine_scratch_;
  }

  recover_duals(it, sigma, mu, out);
}

SolveReport IpmSolver::solve(double epsilon) {
  const auto start_time = std::chrono::steady_clock::now();
  const Eigen::Index n = problem_.dim();
  const double two_n = 2.0 * static_cast<double>(n);

  SolveReport report;
  report.certified_bound = certified_iteration_bound(n, epsilon);

  auto start = initialize(problem_);
  if (!start.has_value()) {
    report.z_star = Eigen::VectorXd::Zero(n);
    report.converged = true;
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return report;
  }
  iterate_ = *start;

  double min_curvature = std::numeric_limits<double>::infinity();
  bool any_direction = false;
  report.mu_trace.reserve(static_cast<size_t>(report.certified_bound) + 1);
  report.contraction.reserve(static_cast<size_t>(report.certified_bound));

  for (int round = 0; round < report.certified_bound; ++round) {
    const double gap = iterate_.gap();
    const double mu = gap / two_n;
    report.mu_trace.push_back(mu);
    if (gap <= epsilon) {
      break;
    }

    // Predictor: pure Newton step toward complementarity, damped adaptively.
    backend_->factorize(iterate_);
    compute_directions(iterate_, StepKind::predictor, mu, directions_);
    const double curvature = directions_.curvature();
    min_curvature = std::min(min_curvature, curvature);
    any_direction = true;

    const double dmu = curvature / two_n;
    const double deviation_sq =
        ((directions_.dgamma.array() * directions_.dphi.array()) - dmu).matrix().squaredNorm() +
        ((directions_.dtheta.array() * directions_.dpsi.array()) - dmu).matrix().squaredNorm();
    const double deviation = std::sqrt(deviation_sq);
    const double alpha =
        deviation == 0.0 ? 0.5 : std::min(0.5, std::sqrt(mu / (8.0 * deviation)));

    iterate_.z += alpha * directions_.dz;
    iterate_.gamma += alpha * directions_.dgamma;
    iterate_.theta += alpha * directions_.dtheta;
    iterate_.phi += alpha * directions_.dphi;
    iterate_.psi += alpha * directions_.dpsi;

    // Corrector: full re-centering Newton step at the predicted point.
    const double mu_hat = iterate_.duality_measure();
    backend_->factorize(iterate_);
    compute_directions(iterate_, StepKind::corrector, mu_hat, directions_);
    min_curvature = std::min(min_curvature, directions_.curvature());

    iterate_.z += directions_.dz;
    iterate_.gamma += directions_.dgamma;
    iterate_.theta += directions_.dtheta;
    iterate_.phi += directions_.dphi;
    iterate_.psi += directions_.dpsi;

    if (!(min_entry(iterate_) > 0.0)) {
      throw NumericalBreakdown("iterate left the strict interior at round " +
                               std::to_string(round));
    }

    report.iterations = round + 1;
    report.contraction.push_back(iterate_.duality_measure() / mu);
    report.max_neighborhood_residual =
        std::max(report.max_neighborhood_residual, neighborhood_residual(iterate_));
  }

  // When the loop exhausts the certificate the trace is still missing the
  // final measure; after an early break it is already recorded.
  if (report.mu_trace.size() == static_cast<size_t>(report.iterations)) {
    report.mu_trace.push_back(iterate_.duality_measure());
  }

  report.z_star = iterate_.z;
  report.final_gap = iterate_.gap();
  report.converged = report.final_gap <= epsilon;
  report.min_curvature = any_direction ? min_curvature : 0.0;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return report;
}

SolveReport solve(const BoxQpProblem& problem, double epsilon, SolveOptions options) {
  IpmSolver solver(problem, options);
  return solver.solve(epsilon);
}

}  // namespace koopmpc::boxqp
