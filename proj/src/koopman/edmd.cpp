#include "koopmpc/koopman/edmd.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace koopmpc::koopman {
namespace {

constexpr Eigen::Index kChunkRows = 4096;

void validate_snapshots(const SnapshotSet& s, const LiftSpec& lift_spec) {
  if (s.states.rows() != s.inputs.rows() || s.states.rows() != s.next_states.rows()) {
    throw std::invalid_argument("fit_edmd: snapshot blocks have different row counts");
  }
  if (s.states.cols() != s.next_states.cols()) {
    throw std::invalid_argument("fit_edmd: state and successor widths disagree");
  }
  if (s.states.cols() != lift_spec.state_dim) {
    throw std::invalid_argument("fit_edmd: snapshot state width disagrees with the dictionary");
  }
  if (s.size() == 0) {
    throw std::invalid_argument("fit_edmd: no snapshots");
  }
}

}  // namespace

KoopmanModel fit_edmd(const SnapshotSet& snapshots, const LiftSpec& lift_spec, double ridge) {
  validate_snapshots(snapshots, lift_spec);
  if (ridge < 0.0) {
    throw std::invalid_argument("fit_edmd: ridge must be nonnegative");
  }

  const Eigen::Index m = snapshots.size();
  const Eigen::Index n_u = snapshots.input_dim();
  const Eigen::Index n_psi = lift_spec.lifted_dim();
  const Eigen::Index p = n_psi + n_u;  // regressor width: [psi(x); u]

  // Normal equations accumulated over row chunks, so the full lifted data
  // matrix never needs to be materialized:
  //   gram = Z^T Z + ridge I,  cross = Z^T Y,  Z = [Psi U],  Y = Psi^+ .
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(p, n_psi);
  Eigen::MatrixXd regressors(std::min(kChunkRows, m), p);
  Eigen::MatrixXd targets(std::min(kChunkRows, m), n_psi);

  for (Eigen::Index begin = 0; begin < m; begin += kChunkRows) {
    const Eigen::Index rows = std::min(kChunkRows, m - begin);
    regressors.topRows(rows).leftCols(n_psi) =
        lift_rows(lift_spec, snapshots.states.middleRows(begin, rows));
    regressors.topRows(rows).rightCols(n_u) = snapshots.inputs.middleRows(begin, rows);
    targets.topRows(rows) = lift_rows(lift_spec, snapshots.next_states.middleRows(begin, rows));

    gram.selfadjointView<Eigen::Lower>().rankUpdate(regressors.topRows(rows).transpose());
    cross.noalias() += regressors.topRows(rows).transpose() * targets.topRows(rows);
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  if (ridge == 0.0) {
    // No regularization to hide a deficient dictionary: check definiteness
    // up front and report how singular the Gram matrix actually is.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(gram, Eigen::EigenvaluesOnly);
    const double min_eig = eigs.eigenvalues().minCoeff();
    const double max_eig = eigs.eigenvalues().maxCoeff();
    const double tol = static_cast<double>(p) * std::numeric_limits<double>::epsilon() * max_eig;
    if (!(min_eig > tol)) {
      const double sigma_min = std::sqrt(std::max(min_eig, 0.0));
      char detail[64];
      std::snprintf(detail, sizeof(detail), "%.3e", sigma_min);
      throw RankDeficiencyError(
          "fit_edmd: regression data is rank-deficient (smallest singular value " +
          std::string(detail) + "); supply a positive ridge");
    }
  } else {
    gram.diagonal().array() += ridge;
  }

  // LDLT tolerates gram matrices whose conditioning exhausts double
  // precision, which thin-plate dictionaries on dense snapshot sets produce.
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("fit_edmd: factorization of the Gram matrix failed");
  }
  const Eigen::MatrixXd coeffs = ldlt.solve(cross);  // p x n_psi, stacked [A B]^T

  KoopmanModel model;
  model.lift = lift_spec;
  model.transition = coeffs.topRows(n_psi).transpose();
  model.input_map = coeffs.bottomRows(n_u).transpose();
  model.ridge = ridge;
  return model;
}

double one_step_state_rms(const KoopmanModel& model, const SnapshotSet& snapshots,
                          Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count <= 0 || begin + count > snapshots.size()) {
    throw std::invalid_argument("one_step_state_rms: row range out of bounds");
  }
  const Eigen::Index n_x = model.state_dim();
  // Only the state block of the lifted prediction is compared, so only the
  // first n_x rows of the model matrices participate.
  const auto state_rows_of_transition = model.transition.topRows(n_x);
  const auto state_rows_of_input_map = model.input_map.topRows(n_x);

  double squared_error = 0.0;
  for (Eigen::Index chunk = begin; chunk < begin + count; chunk += kChunkRows) {
    const Eigen::Index rows = std::min(kChunkRows, begin + count - chunk);
    const Eigen::MatrixXd lifted = lift_rows(model.lift, snapshots.states.middleRows(chunk, rows));
    Eigen::MatrixXd predicted = lifted * state_rows_of_transition.transpose();
    predicted.noalias() += snapshots.inputs.middleRows(chunk, rows) * state_rows_of_input_map.transpose();
    squared_error += (predicted - snapshots.next_states.middleRows(chunk, rows)).squaredNorm();
  }
  return std::sqrt(squared_error / static_cast<double>(count * n_x));
}

Eigen::MatrixXd predict(const KoopmanModel& model, const Eigen::Ref<const Eigen::VectorXd>& x0,
                        const Eigen::Ref<const Eigen::MatrixXd>& input_sequence) {
  if (input_sequence.cols() != model.input_dim()) {
    throw std::invalid_argument("predict: input width disagrees with the model");
  }
  const Eigen::Index n_steps = input_sequence.rows();
  Eigen::VectorXd lifted = lift(model.lift, x0);
  Eigen::VectorXd next(model.lifted_dim());
  Eigen::MatrixXd states(n_steps, model.state_dim());
  for (Eigen::Index k = 0; k < n_steps; ++k) {
    next.noalias() = model.transition * lifted;
    next.noalias() += model.input_map * input_sequence.row(k).transpose();
    states.row(k) = next.head(model.state_dim()).transpose();
    lifted.swap(next);
  }
  return states;
}

}  // namespace koopmpc::koopman
