#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "koopmpc/boxqp/solver.hpp"
#include "koopmpc/kdv/closed_loop.hpp"
#include "koopmpc/kdv/plant.hpp"

using namespace koopmpc;

namespace {

// Single-soliton solution of the unforced equation: 12 k^2 sech^2(k (x - 4 k^2 t - x0))
// travels rightward at speed 4 k^2 without changing shape.
Eigen::VectorXd soliton(const Eigen::VectorXd& grid, double kappa, double t, double x0) {
  Eigen::VectorXd y(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double argument = kappa * (grid[i] - 4.0 * kappa * kappa * t - x0);
    const double sech = 1.0 / std::cosh(argument);
    y[i] = 12.0 * kappa * kappa * sech * sech;
  }
  return y;
}

kdv::KdvConfig wide_domain_config(double dt) {
  kdv::KdvConfig config;
  config.n_grid = 256;
  config.dt = dt;
  config.domain_half_length = 20.0;
  return config;
}

double soliton_error_after(double dt, int steps) {
  const kdv::KdvConfig config = wide_domain_config(dt);
  kdv::KdvPlant plant(config);
  const double kappa = 0.5;
  const double x0 = -5.0;

  Eigen::VectorXd state = soliton(plant.grid(), kappa, 0.0, x0);
  const Eigen::VectorXd no_input = Eigen::VectorXd::Zero(config.n_forcing);
  for (int k = 0; k < steps; ++k) {
    plant.step(state, no_input);
  }
  const Eigen::VectorXd exact = soliton(plant.grid(), kappa, dt * steps, x0);
  return (state - exact).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("soliton transport stays within the accuracy budget") {
  CHECK(soliton_error_after(0.01, 100) < 1e-3);
}

TEST_CASE("halving the step shows second-order convergence on the soliton") {
  // Same end time (t = 2) at dt and dt/2; the error should fall ~4x.
  const double coarse = soliton_error_after(0.01, 200);
  const double fine = soliton_error_after(0.005, 400);
  const double order = std::log2(coarse / fine);
  CAPTURE(coarse);
  CAPTURE(fine);
  CHECK(order >= 1.9);
  CHECK(order <= 2.5);
}

TEST_CASE("unforced dynamics conserve mass to roundoff") {
  kdv::KdvConfig config;  // default grid and domain
  kdv::KdvPlant plant(config);

  Eigen::VectorXd state(config.n_grid);
  for (Eigen::Index i = 0; i < config.n_grid; ++i) {
    const double x = plant.grid()[i];
    state[i] = 0.4 * std::sin(x) + 0.2 * std::cos(2.0 * x) + 0.1;
  }
  const double initial_mass = state.mean();

  const Eigen::VectorXd no_input = Eigen::VectorXd::Zero(config.n_forcing);
  for (int k = 0; k < 1000; ++k) {
    plant.step(state, no_input);
  }
  CHECK(std::abs(state.mean() - initial_mass) < 1e-8);
}

TEST_CASE("forcing profiles are the documented Gaussians and inject mass") {
  kdv::KdvConfig config;
  kdv::KdvPlant plant(config);
  const double L = config.domain_half_length;
  const double centers[] = {-L / 2.0, -L / 6.0, L / 6.0, L / 2.0};

  REQUIRE(plant.forcing_profiles().cols() == 4);
  for (int j = 0; j < 4; ++j) {
    for (Eigen::Index i = 0; i < config.n_grid; ++i) {
      const double x = plant.grid()[i];
      const double expected =
          std::exp(-config.forcing_width * (x - centers[j]) * (x - centers[j]));
      CHECK(plant.forcing_profiles()(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  // One step from rest under a constant input injects dt * forcing, then the
  // dispersion half-step scrambles it across the grid.  Two step-structure
  // invariants survive exactly: the mean grows by dt * mean(forcing) (the
  // derivative terms have zero spatial mean and dispersion leaves the k = 0
  // mode alone), and the l2 norm is preserved by the unitary dispersion
  // rotation up to the O(dt^3) nonlinear correction.
  Eigen::VectorXd state = Eigen::VectorXd::Zero(config.n_grid);
  const Eigen::VectorXd input = Eigen::VectorXd::Ones(4);
  plant.step(state, input);
  const Eigen::VectorXd injected = config.dt * plant.forcing_profiles().rowwise().sum();
  CHECK(std::abs(state.mean() - injected.mean()) < 1e-12);
  CHECK(std::abs(state.norm() - injected.norm()) < 1e-4 * injected.norm());
  CHECK(state.mean() > 0.0);
}

TEST_CASE("one-shot step wrapper matches a persistent plant") {
  kdv::KdvConfig config;
  kdv::KdvPlant plant(config);

  Eigen::VectorXd state(config.n_grid);
  for (Eigen::Index i = 0; i < config.n_grid; ++i) {
    state[i] = 0.3 * std::sin(2.0 * plant.grid()[i]);
  }
  Eigen::VectorXd input(4);
  input << 0.5, -0.25, 0.1, -1.0;

  Eigen::VectorXd persistent = state;
  plant.step(persistent, input);
  const Eigen::VectorXd one_shot = kdv::kdv_step(config, state, input);
  CHECK(persistent == one_shot);
}

TEST_CASE("a violently unstable state raises the blow-up error") {
  kdv::KdvConfig config;
  config.dt = 0.5;  // far beyond the advective stability limit at this amplitude
  kdv::KdvPlant plant(config);

  Eigen::VectorXd state(config.n_grid);
  for (Eigen::Index i = 0; i < config.n_grid; ++i) {
    state[i] = 100.0 * std::sin(plant.grid()[i]);
  }
  const Eigen::VectorXd no_input = Eigen::VectorXd::Zero(4);

  CHECK_THROWS_AS(
      [&] {
        for (int k = 0; k < 100; ++k) {
          plant.step(state, no_input);
        }
      }(),
      kdv::BlowupError);
}

TEST_CASE("configuration validation rejects malformed grids") {
  kdv::KdvConfig config;
  CHECK_NOTHROW(config.validate());

  kdv::KdvConfig bad = config;
  bad.n_grid = 101;  // odd
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = config;
  bad.n_grid = 4;  // too small
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = config;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = config;
  bad.domain_half_length = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = config;
  bad.n_forcing = 3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = config;
  bad.forcing_width = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("dataset generation is reproducible and respects the input box") {
  kdv::KdvConfig config;
  config.n_grid = 32;

  const kdv::DatasetResult a = kdv::generate_dataset(config, 5, 20, 41);
  const kdv::DatasetResult b = kdv::generate_dataset(config, 5, 20, 41);
  const kdv::DatasetResult c = kdv::generate_dataset(config, 5, 20, 42);

  REQUIRE(a.snapshots.size() == 5 * 19);
  REQUIRE(a.snapshots.state_dim() == 32);
  REQUIRE(a.snapshots.input_dim() == 4);

  CHECK(a.snapshots.states == b.snapshots.states);
  CHECK(a.snapshots.inputs == b.snapshots.inputs);
  CHECK(a.snapshots.next_states == b.snapshots.next_states);
  CHECK(a.snapshots.inputs != c.snapshots.inputs);

  CHECK(a.snapshots.inputs.minCoeff() >= -1.0);
  CHECK(a.snapshots.inputs.maxCoeff() <= 1.0);
  CHECK(a.snapshots.states.allFinite());
  CHECK(a.snapshots.next_states.allFinite());
  CHECK(a.discarded_trajectories == 0);

  // Consecutive rows within a trajectory chain: next_states[k] == states[k+1].
  for (int k = 0; k < 18; ++k) {
    CHECK(a.snapshots.next_states.row(k) == a.snapshots.states.row(k + 1));
  }
}

TEST_CASE("reference profile is spatially constant and sinusoidal in time") {
  const Eigen::VectorXd at_zero = kdv::sinusoidal_reference(0.0, 16);
  CHECK(at_zero.isZero(0.0));

  const double t = 6.25;  // a quarter period of the default 25
  const Eigen::VectorXd quarter = kdv::sinusoidal_reference(t, 16, 0.5, 25.0);
  REQUIRE(quarter.size() == 16);
  CHECK(quarter.maxCoeff() == quarter.minCoeff());
  CHECK(quarter[0] == doctest::Approx(0.5 * std::sin(2.0 * M_PI * 0.25)).epsilon(1e-12));
}

TEST_CASE("closed loop converges every instant and respects the input box") {
  kdv::KdvConfig config;
  config.n_grid = 32;

  // Small identified model: enough excitation for a usable local fit.
  const kdv::DatasetResult data = kdv::generate_dataset(config, 30, 60, 11);
  koopman::LiftSpec lift;
  lift.state_dim = 32;
  lift.centers = koopman::sample_rbf_centers(40, 32, -1.0, 1.0, 7);
  koopman::KoopmanModel model = koopman::fit_edmd(data.snapshots, lift, 1e-8);

  mpc::NmpcSpec spec;
  spec.horizon = 10;
  spec.state_weight = Eigen::VectorXd::Constant(32, 1.0);
  spec.input_weight = Eigen::VectorXd::Constant(4, 0.05);
  spec.move_weight = Eigen::VectorXd::Zero(4);
  spec.state_ref = Eigen::VectorXd::Zero(32);
  spec.input_ref = Eigen::VectorXd::Zero(4);
  spec.rho = 100.0;

  const double duration = 1.0;
  const kdv::ClosedLoopLog log = kdv::closed_loop(config, model, spec, duration, 1e-6);

  const int n_steps = 100;  // duration / dt
  REQUIRE(log.times.size() == n_steps);
  REQUIRE(log.states.rows() == n_steps);
  REQUIRE(log.inputs.rows() == n_steps);
  REQUIRE(log.references.rows() == n_steps);
  REQUIRE(log.iterations.size() == static_cast<size_t>(n_steps));

  CHECK(log.all_converged);
  CHECK(log.certified_bound == boxqp::certified_iteration_bound(10 * (4 + 32), 1e-6));
  CHECK(log.max_iterations() <= log.certified_bound);
  CHECK(log.inputs.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(log.state_overshoot == 0.0);

  CHECK(log.times[0] == 0.0);
  CHECK(log.times[1] == doctest::Approx(config.dt).epsilon(1e-12));

  // The tracked reference is positive over (0, 1]; the controller should have
  // pushed the spatial mean off zero toward it by the end of the window.
  const double final_reference = log.references.row(n_steps - 1).mean();
  const double final_mean = log.states.row(n_steps - 1).mean();
  CHECK(final_reference > 0.0);
  CHECK(final_mean > 0.1 * final_reference);
}
