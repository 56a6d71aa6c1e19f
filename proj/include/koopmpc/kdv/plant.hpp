#pragma once

#include <Eigen/Core>

#include <fftw3.h>

#include <stdexcept>

namespace koopmpc::kdv {

/// The plant state stopped being finite (the discretization blew up).
class BlowupError : public std::runtime_error {
public:
  explicit BlowupError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// Discretization of the forced Korteweg-de Vries equation
///   y_t + y y_x + y_xxx = sum_i u_i(t) v_i(x)
/// on the periodic domain [-L, L), with n_forcing fixed Gaussian actuation
/// profiles v_i(x) = exp(-width (x - c_i)^2) centered at
/// c_i = L * (-1/2, -1/6, 1/6, 1/2) for the default four-input layout.
struct KdvConfig {
  Eigen::Index n_grid = 100;                ///< spatial samples, even, >= 8
  double dt = 0.01;                         ///< sampling/integration step
  double domain_half_length = 3.14159265358979323846;  ///< L
  double forcing_width = 25.0;              ///< Gaussian profile sharpness
  Eigen::Index n_forcing = 4;               ///< number of actuation profiles

  void validate() const;
};

/// Split-step spectral integrator: a sampling step advances the state by
/// half a step of the (exact, diagonal-in-frequency) dispersion y_t = -y_xxx,
/// one full RK4 step of the dealiased advection-plus-forcing part
/// y_t = -(y^2/2)_x + forcing, and a final half dispersion step.  The input
/// is held constant across the step.
///
/// The instance owns its FFT plans and scratch buffers, so stepping never
/// allocates; use one instance per thread.
class KdvPlant {
public:
  explicit KdvPlant(const KdvConfig& config);
  ~KdvPlant();
  KdvPlant(const KdvPlant&) = delete;
  KdvPlant& operator=(const KdvPlant&) = delete;

  const KdvConfig& config() const { return config_; }
  const Eigen::VectorXd& grid() const { return grid_; }

  /// Actuation profiles evaluated on the grid, one column per input channel.
  const Eigen::MatrixXd& forcing_profiles() const { return profiles_; }

  /// Advances `state` in place by one sampling step under constant `input`.
  /// Throws BlowupError if the updated state is not finite.
  void step(Eigen::Ref<Eigen::VectorXd> state,
            const Eigen::Ref<const Eigen::VectorXd>& input);

private:
  void dispersion_half_step(Eigen::Ref<Eigen::VectorXd> state);
  void advection_rhs(const Eigen::VectorXd& state, Eigen::VectorXd& out);

  KdvConfig config_;
  Eigen::VectorXd grid_;
  Eigen::MatrixXd profiles_;

  // Spectral constants: half-step dispersion rotation and the dealiased
  // first-derivative multiplier (purely imaginary, stored as its coefficient).
  Eigen::VectorXd dispersion_cos_;
  Eigen::VectorXd dispersion_sin_;
  Eigen::VectorXd derivative_coeff_;

  Eigen::VectorXd forcing_;
  Eigen::VectorXd stage_;
  Eigen::VectorXd rhs1_, rhs2_, rhs3_, rhs4_;

  double* real_buffer_ = nullptr;
  fftw_complex* spectral_buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

/// One-shot convenience wrapper: builds a plant, steps once, returns the new
/// state.  Prefer a persistent KdvPlant in loops.
Eigen::VectorXd kdv_step(const KdvConfig& config, Eigen::VectorXd state,
                         const Eigen::Ref<const Eigen::VectorXd>& input);

}  // namespace koopmpc::kdv
