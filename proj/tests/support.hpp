// Shared helpers for the test suite: random problem generators, an exhaustive
// active-set reference solver, and a full-system Newton-direction oracle that
// the production solver's condensed elimination is checked against.
#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "koopmpc/boxqp/problem.hpp"
#include "koopmpc/boxqp/solver.hpp"
#include "koopmpc/util/rng.hpp"

namespace koopmpc::test {

inline Eigen::MatrixXd random_gaussian(Eigen::Index rows, Eigen::Index cols, util::Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = gauss(rng);
    }
  }
  return out;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, util::Rng& rng, double scale = 1.0) {
  return scale * random_gaussian(n, 1, rng);
}

/// Well-conditioned random SPD matrix: Wishart normalized by n, plus a ridge.
inline Eigen::MatrixXd random_spd(Eigen::Index n, util::Rng& rng, double ridge = 0.1) {
  const Eigen::MatrixXd square = random_gaussian(n, n, rng);
  Eigen::MatrixXd out = square.transpose() * square / static_cast<double>(n);
  out.diagonal().array() += ridge;
  return out;
}

inline boxqp::BoxQpProblem random_dense_problem(Eigen::Index n, util::Rng& rng,
                                                double linear_scale = 1.0) {
  return boxqp::BoxQpProblem(boxqp::DenseHessian{random_spd(n, rng)},
                             random_vector(n, rng, linear_scale));
}

/// Random structured instance with the condensed-cost block layout.
inline boxqp::BoxQpProblem random_structured_problem(Eigen::Index horizon, Eigen::Index n_u,
                                                     Eigen::Index n_x, util::Rng& rng,
                                                     double rho = 100.0) {
  boxqp::KoopmanHessian hessian;
  hessian.rho = rho;
  hessian.forced_response = random_gaussian(horizon * n_x, horizon * n_u, rng) /
                            std::sqrt(static_cast<double>(n_x));
  hessian.input_block = random_spd(horizon * n_u, rng);
  hessian.state_diag =
      (random_gaussian(horizon * n_x, 1, rng).array().abs() + 0.5).matrix();
  Eigen::VectorXd h = random_vector(horizon * (n_u + n_x), rng);
  return boxqp::BoxQpProblem(std::move(hessian), std::move(h));
}

/// Exact minimizer of (1/2) z^T H z + h^T z over [-1, 1]^n by exhaustive
/// enumeration of all 3^n bound-activity patterns (each coordinate free, at
/// the lower bound, or at the upper bound), with multiplier sign checks.
/// Only usable for small n; the unique KKT-consistent pattern is returned.
inline Eigen::VectorXd active_set_minimizer(const Eigen::MatrixXd& hessian,
                                            const Eigen::VectorXd& h) {
  const Eigen::Index n = h.size();
  if (n > 12) {
    throw std::invalid_argument("active_set_minimizer: enumeration limited to n <= 12");
  }
  long patterns = 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    patterns *= 3;
  }

  // Acceptance windows: free coordinates may sit on the boundary (their
  // multiplier is then zero), and gradient signs are checked with a small
  // slack so ties resolve to some valid pattern rather than none.
  constexpr double kBoundSlack = 1e-9;
  constexpr double kGradientSlack = 1e-9;

  std::vector<int> activity(static_cast<size_t>(n));
  for (long pattern = 0; pattern < patterns; ++pattern) {
    long code = pattern;
    Eigen::Index n_free = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      activity[static_cast<size_t>(i)] = static_cast<int>(code % 3);
      code /= 3;
      n_free += activity[static_cast<size_t>(i)] == 0 ? 1 : 0;
    }

    Eigen::VectorXd z(n);
    std::vector<Eigen::Index> free_index;
    free_index.reserve(static_cast<size_t>(n_free));
    for (Eigen::Index i = 0; i < n; ++i) {
      switch (activity[static_cast<size_t>(i)]) {
        case 0:
          free_index.push_back(i);
          z[i] = 0.0;
          break;
        case 1:
          z[i] = -1.0;
          break;
        default:
          z[i] = 1.0;
          break;
      }
    }

    if (n_free > 0) {
      Eigen::MatrixXd reduced(n_free, n_free);
      Eigen::VectorXd rhs(n_free);
      for (Eigen::Index a = 0; a < n_free; ++a) {
        rhs[a] = -h[free_index[static_cast<size_t>(a)]];
        for (Eigen::Index b = 0; b < n_free; ++b) {
          reduced(a, b) =
              hessian(free_index[static_cast<size_t>(a)], free_index[static_cast<size_t>(b)]);
        }
      }
      // Subtract the fixed-coordinate contribution from the right-hand side.
      for (Eigen::Index a = 0; a < n_free; ++a) {
        for (Eigen::Index i = 0; i < n; ++i) {
          if (activity[static_cast<size_t>(i)] != 0) {
            rhs[a] -= hessian(free_index[static_cast<size_t>(a)], i) * z[i];
          }
        }
      }
      const Eigen::VectorXd z_free = reduced.llt().solve(rhs);
      bool inside = true;
      for (Eigen::Index a = 0; a < n_free; ++a) {
        if (std::abs(z_free[a]) > 1.0 + kBoundSlack) {
          inside = false;
          break;
        }
      }
      if (!inside) {
        continue;
      }
      for (Eigen::Index a = 0; a < n_free; ++a) {
        z[free_index[static_cast<size_t>(a)]] = z_free[a];
      }
    }

    const Eigen::VectorXd gradient = hessian * z + h;
    bool kkt = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int kind = activity[static_cast<size_t>(i)];
      if (kind == 1 && gradient[i] < -kGradientSlack) {  // lower bound: multiplier >= 0
        kkt = false;
        break;
      }
      if (kind == 2 && gradient[i] > kGradientSlack) {  // upper bound: multiplier >= 0
        kkt = false;
        break;
      }
    }
    if (kkt) {
      return z;
    }
  }
  throw std::runtime_error("active_set_minimizer: no KKT-consistent activity pattern found");
}

/// Newton direction computed from the full primal-dual system (all five
/// blocks as unknowns, no elimination): an independent oracle for the
/// production solver's condensed path.  `sigma_mu` is the centering target
/// sigma * mu on the complementarity rows.
inline boxqp::NewtonDirections full_system_direction(const boxqp::IpmIterate& iterate,
                                                     const Eigen::MatrixXd& hessian,
                                                     double sigma_mu) {
  const Eigen::Index n = iterate.dim();
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(5 * n, 5 * n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(5 * n);

  // Unknown layout: [dz; dgamma; dtheta; dphi; dpsi].
  const auto dz = Eigen::seqN(0, n);
  const auto dgamma = Eigen::seqN(n, n);
  const auto dtheta = Eigen::seqN(2 * n, n);
  const auto dphi = Eigen::seqN(3 * n, n);
  const auto dpsi = Eigen::seqN(4 * n, n);

  // Stationarity: 2 lambda H dz + dgamma - dtheta = 0.
  system(dz, dz) = 2.0 * iterate.lambda * hessian;
  system(dz, dgamma) = Eigen::MatrixXd::Identity(n, n);
  system(dz, dtheta) = -Eigen::MatrixXd::Identity(n, n);

  // Slack consistency: dphi = -dz, dpsi = dz.
  system(dgamma, dphi) = Eigen::MatrixXd::Identity(n, n);
  system(dgamma, dz) = Eigen::MatrixXd::Identity(n, n);
  system(dtheta, dpsi) = Eigen::MatrixXd::Identity(n, n);
  system(dtheta, dz) = -Eigen::MatrixXd::Identity(n, n);

  // Complementarity rows.
  system(dphi, dgamma) = iterate.phi.asDiagonal();
  system(dphi, dphi) = iterate.gamma.asDiagonal();
  rhs(dphi) = sigma_mu - (iterate.gamma.array() * iterate.phi.array());
  system(dpsi, dtheta) = iterate.psi.asDiagonal();
  system(dpsi, dpsi) = iterate.theta.asDiagonal();
  rhs(dpsi) = sigma_mu - (iterate.theta.array() * iterate.psi.array());

  const Eigen::VectorXd solution = system.partialPivLu().solve(rhs);
  boxqp::NewtonDirections directions;
  directions.dz = solution(dz);
  directions.dgamma = solution(dgamma);
  directions.dtheta = solution(dtheta);
  directions.dphi = solution(dphi);
  directions.dpsi = solution(dpsi);
  return directions;
}

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<uint64_t> counter{0};
    const auto stamp = static_cast<uint64_t>(
        std::chrono::steady_clock::now().time_since_epoch().count());
    path_ = std::filesystem::temp_directory_path() /
            ("koopmpc_test_" + std::to_string(stamp) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

}  // namespace koopmpc::test
