#include "koopmpc/boxqp/problem.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <utility>

namespace koopmpc::boxqp {
namespace {

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw std::invalid_argument(message);
  }
}

bool is_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    return false;
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

void validate_positive_definite(const Eigen::MatrixXd& m, const std::string& label) {
  require(is_symmetric(m), label + ": matrix must be symmetric");
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  require(llt.info() == Eigen::Success,
          label + ": Cholesky factorization failed, matrix is not positive definite");
}

}  // namespace

Eigen::MatrixXd KoopmanHessian::expand() const {
  const Eigen::Index nu = input_dim();
  const Eigen::Index nx = state_dim();
  Eigen::MatrixXd full(nu + nx, nu + nx);
  full.topLeftCorner(nu, nu).noalias() = rho * (forced_response.transpose() * forced_response);
  full.topLeftCorner(nu, nu) += input_block;
  full.topRightCorner(nu, nx).noalias() = -rho * forced_response.transpose();
  full.bottomLeftCorner(nx, nu).noalias() = -rho * forced_response;
  full.bottomRightCorner(nx, nx).setZero();
  full.bottomRightCorner(nx, nx).diagonal() = state_diag.array() + rho;
  return full;
}

BoxQpProblem::BoxQpProblem(HessianForm hessian, Eigen::VectorXd linear_term)
    : hessian_(std::move(hessian)), linear_term_(std::move(linear_term)) {
  require(linear_term_.size() >= 1, "problem dimension must be at least 1");
  require(linear_term_.allFinite(), "linear term must be finite");

  if (const auto* dense = std::get_if<DenseHessian>(&hessian_)) {
    require(dense->matrix.rows() == linear_term_.size(),
            "hessian and linear term dimensions disagree");
    validate_positive_definite(dense->matrix, "dense hessian");
  } else {
    const auto& k = std::get<KoopmanHessian>(hessian_);
    require(k.rho > 0.0, "structured hessian: rho must be positive");
    require(k.input_block.rows() == k.input_block.cols(),
            "structured hessian: input block must be square");
    require(is_symmetric(k.input_block), "structured hessian: input block must be symmetric");
    require(k.forced_response.rows() == k.state_dim() &&
                k.forced_response.cols() == k.input_dim(),
            "structured hessian: forced-response dimensions disagree with blocks");
    require((k.state_diag.array() > 0.0).all(),
            "structured hessian: state weights must be strictly positive");
    require(k.dim() == linear_term_.size(), "hessian and linear term dimensions disagree");
    validate_positive_definite(k.expand(), "structured hessian");
  }
}

void BoxQpProblem::set_linear_term(const Eigen::Ref<const Eigen::VectorXd>& linear_term) {
  require(linear_term.size() == linear_term_.size(),
          "replacement linear term has the wrong length");
  linear_term_ = linear_term;
}

void BoxQpProblem::hessian_times(const Eigen::Ref<const Eigen::VectorXd>& z,
                                 Eigen::Ref<Eigen::VectorXd> y) const {
  if (const auto* dense = std::get_if<DenseHessian>(&hessian_)) {
    y.noalias() = dense->matrix.selfadjointView<Eigen::Lower>() * z;
    return;
  }
  const auto& k = std::get<KoopmanHessian>(hessian_);
  const Eigen::Index nu = k.input_dim();
  const Eigen::Index nx = k.state_dim();
  const auto u = z.head(nu);
  const auto x = z.tail(nx);
  // y_U = rho F^T (F u - x) + input_block u;  y_X = rho (x - F u) + state_diag .* x
  Eigen::VectorXd residual = k.forced_response * u;  // F u
  residual -= x;
  y.head(nu).noalias() = k.rho * (k.forced_response.transpose() * residual);
  y.head(nu).noalias() += k.input_block.selfadjointView<Eigen::Lower>() * u;
  y.tail(nx) = (-k.rho) * residual;
  y.tail(nx).array() += k.state_diag.array() * x.array();
}

Eigen::MatrixXd BoxQpProblem::dense_hessian() const {
  if (const auto* dense = std::get_if<DenseHessian>(&hessian_)) {
    return dense->matrix;
  }
  return std::get<KoopmanHessian>(hessian_).expand();
}

double BoxQpProblem::objective(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  Eigen::VectorXd hz(z.size());
  hessian_times(z, hz);
  return 0.5 * z.dot(hz) + z.dot(linear_term_);
}

}  // namespace koopmpc::boxqp
