#include "koopmpc/koopman/lift.hpp"

#include <cmath>
#include <stdexcept>

#include "koopmpc/util/rng.hpp"

namespace koopmpc::koopman {
namespace {

// (1/2) s log(s), continuously extended by 0 at s = 0; s is the squared radius.
inline double thin_plate_from_squared(double s) { return s > 0.0 ? 0.5 * s * std::log(s) : 0.0; }

}  // namespace

void lift_into(const LiftSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
               Eigen::Ref<Eigen::VectorXd> out) {
  if (x.size() != spec.state_dim || out.size() != spec.lifted_dim()) {
    throw std::invalid_argument("lift_into: dimension mismatch");
  }
  out.head(spec.state_dim) = x;
  for (Eigen::Index i = 0; i < spec.n_rbf(); ++i) {
    const double s = (x - spec.centers.row(i).transpose()).squaredNorm();
    out[spec.state_dim + i] = thin_plate_from_squared(s);
  }
}

Eigen::VectorXd lift(const LiftSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd out(spec.lifted_dim());
  lift_into(spec, x, out);
  return out;
}

Eigen::MatrixXd lift_rows(const LiftSpec& spec,
                          const Eigen::Ref<const Eigen::MatrixXd>& states) {
  if (states.cols() != spec.state_dim) {
    throw std::invalid_argument("lift_rows: state width disagrees with the dictionary");
  }
  const Eigen::Index m = states.rows();
  const Eigen::Index n_rbf = spec.n_rbf();
  Eigen::MatrixXd out(m, spec.lifted_dim());
  out.leftCols(spec.state_dim) = states;
  if (n_rbf == 0) {
    return out;
  }

  // Squared distances ||x_j - c_i||^2 = |x_j|^2 + |c_i|^2 - 2 x_j . c_i.
  auto radial = out.rightCols(n_rbf);
  radial.noalias() = states * spec.centers.transpose();
  radial *= -2.0;
  radial.colwise() += states.rowwise().squaredNorm();
  radial.rowwise() += spec.centers.rowwise().squaredNorm().transpose();
  // Rounding can push tiny true distances below zero; clamp before the log.
  radial = radial.unaryExpr([](double s) { return thin_plate_from_squared(std::max(s, 0.0)); });
  return out;
}

Eigen::MatrixXd sample_rbf_centers(Eigen::Index n_rbf, Eigen::Index state_dim, double lo,
                                   double hi, uint64_t seed) {
  if (n_rbf < 0 || state_dim < 1) {
    throw std::invalid_argument("sample_rbf_centers: invalid dimensions");
  }
  if (!(lo < hi)) {
    throw std::invalid_argument("sample_rbf_centers: interval is empty");
  }
  util::Rng rng(seed);
  std::uniform_real_distribution<double> coordinate(lo, hi);
  Eigen::MatrixXd centers(n_rbf, state_dim);
  for (Eigen::Index i = 0; i < n_rbf; ++i) {
    for (Eigen::Index j = 0; j < state_dim; ++j) {
      centers(i, j) = coordinate(rng);
    }
  }
  return centers;
}

}  // namespace koopmpc::koopman
