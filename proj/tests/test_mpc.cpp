#include <doctest.h>

#include <Eigen/Dense>

#include <stdexcept>

#include "koopmpc/boxqp/solver.hpp"
#include "koopmpc/koopman/lift.hpp"
#include "koopmpc/mpc/condense.hpp"
#include "support.hpp"

using namespace koopmpc;

namespace {

koopman::KoopmanModel synthetic_model(Eigen::Index n_x, Eigen::Index n_rbf, Eigen::Index n_u,
                                      util::Rng& rng) {
  koopman::KoopmanModel model;
  model.lift.state_dim = n_x;
  model.lift.centers = koopman::sample_rbf_centers(n_rbf, n_x, -1.0, 1.0, rng());
  const Eigen::Index n_psi = model.lift.lifted_dim();
  model.transition = 0.5 * test::random_gaussian(n_psi, n_psi, rng) /
                     std::sqrt(static_cast<double>(n_psi));
  model.input_map = test::random_gaussian(n_psi, n_u, rng);
  return model;
}

mpc::NmpcSpec default_spec(Eigen::Index n_x, Eigen::Index n_u, int horizon) {
  mpc::NmpcSpec spec;
  spec.horizon = horizon;
  spec.state_weight = Eigen::VectorXd::Constant(n_x, 1.0);
  spec.input_weight = Eigen::VectorXd::Constant(n_u, 0.05);
  spec.move_weight = Eigen::VectorXd::Constant(n_u, 0.0);
  spec.state_ref = Eigen::VectorXd::Zero(n_x);
  spec.input_ref = Eigen::VectorXd::Zero(n_u);
  spec.rho = 100.0;
  return spec;
}

}  // namespace

TEST_CASE("prediction stack matches explicit powers of the transition") {
  util::Rng rng(61);
  const Eigen::Index n_x = 3;
  const Eigen::Index n_u = 2;
  const int horizon = 5;
  const koopman::KoopmanModel model = synthetic_model(n_x, 4, n_u, rng);
  const Eigen::Index n_psi = model.lifted_dim();

  const mpc::PredictionStack stack = mpc::build_prediction_stack(model, horizon);
  REQUIRE(stack.free_response.rows() == horizon * n_x);
  REQUIRE(stack.free_response.cols() == n_psi);
  REQUIRE(stack.forced_response.rows() == horizon * n_x);
  REQUIRE(stack.forced_response.cols() == horizon * n_u);

  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n_psi, n_psi);
  for (int k = 0; k < horizon; ++k) {
    power = model.transition * power;  // A^{k+1}
    CHECK((stack.free_response.middleRows(k * n_x, n_x) - power.topRows(n_x))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
    for (int j = 0; j < horizon; ++j) {
      const Eigen::MatrixXd block = stack.forced_response.block(k * n_x, j * n_u, n_x, n_u);
      if (j > k) {
        CHECK(block.isZero(0.0));
      } else {
        // C A^{k-j} B
        Eigen::MatrixXd expected = model.input_map;
        for (int step = 0; step < k - j; ++step) {
          expected = model.transition * expected;
        }
        CHECK((block - expected.topRows(n_x)).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("prediction stack reproduces a lifted rollout") {
  util::Rng rng(62);
  const Eigen::Index n_x = 4;
  const Eigen::Index n_u = 2;
  const int horizon = 6;
  const koopman::KoopmanModel model = synthetic_model(n_x, 5, n_u, rng);

  const Eigen::VectorXd x0 = 0.3 * test::random_vector(n_x, rng);
  const Eigen::MatrixXd inputs = test::random_gaussian(horizon, n_u, rng);
  const Eigen::VectorXd psi0 = koopman::lift(model.lift, x0);

  Eigen::VectorXd stacked_inputs(horizon * n_u);
  for (int k = 0; k < horizon; ++k) {
    stacked_inputs.segment(k * n_u, n_u) = inputs.row(k).transpose();
  }

  const mpc::PredictionStack stack = mpc::build_prediction_stack(model, horizon);
  const Eigen::VectorXd stacked_prediction =
      stack.free_response * psi0 + stack.forced_response * stacked_inputs;

  const Eigen::MatrixXd rollout = koopman::predict(model, x0, inputs);
  for (int k = 0; k < horizon; ++k) {
    CHECK((stacked_prediction.segment(k * n_x, n_x) - rollout.row(k).transpose())
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("move penalty is the quadratic form of successive input differences") {
  util::Rng rng(63);
  const Eigen::Index n_u = 3;
  const int horizon = 5;
  const Eigen::VectorXd weight =
      (test::random_gaussian(n_u, 1, rng).array().abs() + 0.1).matrix();

  const Eigen::MatrixXd penalty = mpc::build_move_penalty(weight, horizon);
  REQUIRE(penalty.rows() == horizon * n_u);
  CHECK((penalty - penalty.transpose()).cwiseAbs().maxCoeff() == 0.0);

  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd stacked = test::random_vector(horizon * n_u, rng);
    double expected = 0.0;
    Eigen::VectorXd previous = Eigen::VectorXd::Zero(n_u);
    for (int k = 0; k < horizon; ++k) {
      const Eigen::VectorXd diff = stacked.segment(k * n_u, n_u) - previous;
      expected += diff.dot(weight.asDiagonal() * diff);
      previous = stacked.segment(k * n_u, n_u);
    }
    CHECK(stacked.dot(penalty * stacked) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("condensed problem matches its dense reference construction") {
  util::Rng rng(64);
  const Eigen::Index n_x = 3;
  const Eigen::Index n_u = 2;
  const int horizon = 4;
  const koopman::KoopmanModel model = synthetic_model(n_x, 4, n_u, rng);

  mpc::NmpcSpec spec = default_spec(n_x, n_u, horizon);
  spec.move_weight = Eigen::VectorXd::Constant(n_u, 0.01);
  spec.state_ref = Eigen::VectorXd::Constant(n_x, 0.25);
  spec.input_ref = Eigen::VectorXd::Constant(n_u, -0.1);

  const mpc::PredictionStack stack = mpc::build_prediction_stack(model, horizon);
  const Eigen::VectorXd psi0 =
      koopman::lift(model.lift, (0.2 * test::random_vector(n_x, rng)).eval());

  const mpc::KoopmanBoxQp structured(spec, stack, psi0);
  const boxqp::BoxQpProblem dense = mpc::build_general_qp(spec, stack, psi0);

  REQUIRE(structured.problem().dim() == horizon * (n_u + n_x));
  CHECK(structured.problem().has_structured_hessian());
  CHECK_FALSE(dense.has_structured_hessian());

  CHECK((structured.problem().dense_hessian() - dense.dense_hessian()).cwiseAbs().maxCoeff() <=
        1e-12);
  CHECK((structured.problem().linear_term() - dense.linear_term()).cwiseAbs().maxCoeff() <=
        1e-12);
}

TEST_CASE("linear term follows the documented assembly") {
  util::Rng rng(65);
  const Eigen::Index n_x = 2;
  const Eigen::Index n_u = 1;
  const int horizon = 3;
  const koopman::KoopmanModel model = synthetic_model(n_x, 3, n_u, rng);

  mpc::NmpcSpec spec = default_spec(n_x, n_u, horizon);
  spec.state_ref = Eigen::VectorXd::Constant(n_x, 0.5);
  spec.input_ref = Eigen::VectorXd::Constant(n_u, 0.2);

  const mpc::PredictionStack stack = mpc::build_prediction_stack(model, horizon);
  const Eigen::VectorXd psi0 =
      koopman::lift(model.lift, (0.1 * test::random_vector(n_x, rng)).eval());
  const mpc::KoopmanBoxQp qp(spec, stack, psi0);

  // h = rho [F^T E; -E] psi0 - [Wu_bar ur_bar; Wx_bar xr_bar].
  Eigen::VectorXd expected(horizon * (n_u + n_x));
  expected.head(horizon * n_u) =
      spec.rho * stack.forced_response.transpose() * (stack.free_response * psi0);
  expected.tail(horizon * n_x) = -spec.rho * (stack.free_response * psi0);
  for (int k = 0; k < horizon; ++k) {
    expected.segment(k * n_u, n_u) -=
        (spec.input_weight.array() * spec.input_ref.array()).matrix();
    expected.segment(horizon * n_u + k * n_x, n_x) -=
        (spec.state_weight.array() * spec.state_ref.array()).matrix();
  }
  CHECK((qp.problem().linear_term() - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("linear-term update equals a fresh assembly") {
  util::Rng rng(66);
  const Eigen::Index n_x = 3;
  const Eigen::Index n_u = 2;
  const int horizon = 4;
  const koopman::KoopmanModel model = synthetic_model(n_x, 4, n_u, rng);
  const mpc::NmpcSpec spec = default_spec(n_x, n_u, horizon);
  const mpc::PredictionStack stack = mpc::build_prediction_stack(model, horizon);

  const Eigen::VectorXd psi0 =
      koopman::lift(model.lift, (0.2 * test::random_vector(n_x, rng)).eval());
  mpc::KoopmanBoxQp qp(spec, stack, psi0);

  const Eigen::VectorXd x_new = 0.3 * test::random_vector(n_x, rng);
  const Eigen::VectorXd psi_new = koopman::lift(model.lift, x_new);
  const Eigen::VectorXd state_ref = Eigen::VectorXd::Constant(n_x, -0.4);
  const Eigen::VectorXd input_ref = Eigen::VectorXd::Constant(n_u, 0.3);
  qp.update_linear_term(psi_new, state_ref, input_ref);

  mpc::NmpcSpec fresh_spec = spec;
  fresh_spec.state_ref = state_ref;
  fresh_spec.input_ref = input_ref;
  const mpc::KoopmanBoxQp fresh(fresh_spec, stack, psi_new);

  CHECK((qp.problem().linear_term() - fresh.problem().linear_term()).cwiseAbs().maxCoeff() <=
        1e-12);

  // Out-of-box references are rejected before touching the problem.
  CHECK_THROWS_AS(
      qp.update_linear_term(psi_new, Eigen::VectorXd::Constant(n_x, 1.5), input_ref),
      std::invalid_argument);
}

TEST_CASE("specification validation rejects each malformed field") {
  mpc::NmpcSpec good = default_spec(2, 1, 3);
  CHECK_NOTHROW(good.validate());

  mpc::NmpcSpec bad = good;
  bad.horizon = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.state_weight[0] = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.input_weight[0] = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.move_weight[0] = -1e-9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.state_ref[0] = 1.01;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.input_ref[0] = -2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.rho = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("condensed instances solve identically through both backends") {
  util::Rng rng(67);
  const Eigen::Index n_x = 5;
  const Eigen::Index n_u = 2;
  const int horizon = 5;
  const koopman::KoopmanModel model = synthetic_model(n_x, 6, n_u, rng);
  mpc::NmpcSpec spec = default_spec(n_x, n_u, horizon);
  spec.state_ref = Eigen::VectorXd::Constant(n_x, 0.5);

  const mpc::PredictionStack stack = mpc::build_prediction_stack(model, horizon);
  const Eigen::VectorXd psi0 =
      koopman::lift(model.lift, (0.4 * test::random_vector(n_x, rng)).eval());
  const mpc::KoopmanBoxQp qp(spec, stack, psi0);

  const boxqp::SolveReport structured = boxqp::solve(qp.problem(), 1e-8);
  boxqp::SolveOptions dense;
  dense.force_dense = true;
  const boxqp::SolveReport expanded = boxqp::solve(qp.problem(), 1e-8, dense);

  CHECK(structured.converged);
  CHECK(structured.iterations == expanded.iterations);
  CHECK((structured.z_star - expanded.z_star).cwiseAbs().maxCoeff() <= 1e-7);

  const Eigen::VectorXd first = qp.first_input(structured.z_star);
  REQUIRE(first.size() == n_u);
  CHECK(first == structured.z_star.head(n_u));
}

TEST_CASE("stack and specification shape mismatches are rejected") {
  util::Rng rng(68);
  const koopman::KoopmanModel model = synthetic_model(3, 4, 2, rng);
  const mpc::PredictionStack stack = mpc::build_prediction_stack(model, 4);
  const Eigen::VectorXd psi0 = koopman::lift(model.lift, Eigen::VectorXd::Zero(3));

  // Spec horizon disagrees with the stack.
  const mpc::NmpcSpec spec = default_spec(3, 2, 5);
  CHECK_THROWS_AS(mpc::KoopmanBoxQp(spec, stack, psi0), std::invalid_argument);

  // Lifted state of the wrong length.
  const mpc::NmpcSpec matching = default_spec(3, 2, 4);
  CHECK_THROWS_AS(mpc::KoopmanBoxQp(matching, stack, Eigen::VectorXd::Zero(2)),
                  std::invalid_argument);
}
