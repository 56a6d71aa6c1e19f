#include "koopmpc/kdv/plant.hpp"

#include <cmath>
#include <cstring>

namespace koopmpc::kdv {
namespace {

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw std::invalid_argument(message);
  }
}

}  // namespace

void KdvConfig::validate() const {
  require(n_grid >= 8 && n_grid % 2 == 0, "n_grid must be even and at least 8");
  require(dt > 0.0, "dt must be positive");
  require(domain_half_length > 0.0, "domain half-length must be positive");
  require(forcing_width > 0.0, "forcing width must be positive");
  require(n_forcing == 4, "the actuation layout is fixed at 4 channels");
}

KdvPlant::KdvPlant(const KdvConfig& config) : config_(config) {
  config_.validate();
  const Eigen::Index n = config_.n_grid;
  const Eigen::Index n_spec = n / 2 + 1;
  const double half_length = config_.domain_half_length;

  grid_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    grid_[i] = -half_length + 2.0 * half_length * static_cast<double>(i) / static_cast<double>(n);
  }

  profiles_.resize(n, config_.n_forcing);
  const double centers[4] = {-half_length / 2.0, -half_length / 6.0, half_length / 6.0,
                             half_length / 2.0};
  for (Eigen::Index j = 0; j < config_.n_forcing; ++j) {
    profiles_.col(j) =
        (-config_.forcing_width * (grid_.array() - centers[j]).square()).exp();
  }

  // Wavenumbers of the real transform are k_j = j pi / L; the nonlinear
  // product is dealiased by the 2/3 rule (bins above n/3 are dropped).
  dispersion_cos_.resize(n_spec);
  dispersion_sin_.resize(n_spec);
  derivative_coeff_.resize(n_spec);
  const double base = M_PI / half_length;
  for (Eigen::Index j = 0; j < n_spec; ++j) {
    const double k = base * static_cast<double>(j);
    const double angle = k * k * k * config_.dt / 2.0;
    dispersion_cos_[j] = std::cos(angle);
    dispersion_sin_[j] = std::sin(angle);
    derivative_coeff_[j] = (3 * j <= n) ? k : 0.0;
  }

  forcing_.resize(n);
  stage_.resize(n);
  rhs1_.resize(n);
  rhs2_.resize(n);
  rhs3_.resize(n);
  rhs4_.resize(n);

  real_buffer_ = fftw_alloc_real(static_cast<size_t>(n));
  spectral_buffer_ = fftw_alloc_complex(static_cast<size_t>(n_spec));
  // FFTW_ESTIMATE keeps planning deterministic (no runtime measurement).
  forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_buffer_, spectral_buffer_,
                                  FFTW_ESTIMATE);
  inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spectral_buffer_, real_buffer_,
                                  FFTW_ESTIMATE);
  if (forward_ == nullptr || inverse_ == nullptr) {
    throw std::runtime_error("KdvPlant: FFT planning failed");
  }
}

KdvPlant::~KdvPlant() {
  fftw_destroy_plan(forward_);
  fftw_destroy_plan(inverse_);
  fftw_free(real_buffer_);
  fftw_free(spectral_buffer_);
}

void KdvPlant::dispersion_half_step(Eigen::Ref<Eigen::VectorXd> state) {
  const Eigen::Index n = config_.n_grid;
  const Eigen::Index n_spec = n / 2 + 1;
  std::memcpy(real_buffer_, state.data(), sizeof(double) * static_cast<size_t>(n));
  fftw_execute(forward_);
  // Multiply each bin by exp(+i k^3 dt / 2): the exact flow of y_t = -y_xxx.
  for (Eigen::Index j = 0; j < n_spec; ++j) {
    const double re = spectral_buffer_[j][0];
    const double im = spectral_buffer_[j][1];
    spectral_buffer_[j][0] = re * dispersion_cos_[j] - im * dispersion_sin_[j];
    spectral_buffer_[j][1] = re * dispersion_sin_[j] + im * dispersion_cos_[j];
  }
  fftw_execute(inverse_);
  const double scale = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    state[i] = real_buffer_[i] * scale;
  }
}

void KdvPlant::advection_rhs(const Eigen::VectorXd& state, Eigen::VectorXd& out) {
  const Eigen::Index n = config_.n_grid;
  const Eigen::Index n_spec = n / 2 + 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    real_buffer_[i] = 0.5 * state[i] * state[i];
  }
  fftw_execute(forward_);
  // i k times the (dealiased) spectrum of y^2/2.
  for (Eigen::Index j = 0; j < n_spec; ++j) {
    const double re = spectral_buffer_[j][0];
    const double im = spectral_buffer_[j][1];
    spectral_buffer_[j][0] = -derivative_coeff_[j] * im;
    spectral_buffer_[j][1] = derivative_coeff_[j] * re;
  }
  fftw_execute(inverse_);
  const double scale = -1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = real_buffer_[i] * scale + forcing_[i];
  }
}

void KdvPlant::step(Eigen::Ref<Eigen::VectorXd> state,
                    const Eigen::Ref<const Eigen::VectorXd>& input) {
  require(state.size() == config_.n_grid, "KdvPlant::step: state length disagrees with grid");
  require(input.size() == config_.n_forcing,
          "KdvPlant::step: input length disagrees with actuation layout");

  forcing_.noalias() = profiles_ * input;

  dispersion_half_step(state);

  const double dt = config_.dt;
  advection_rhs(state, rhs1_);
  stage_ = state + (0.5 * dt) * rhs1_;
  advection_rhs(stage_, rhs2_);
  stage_ = state + (0.5 * dt) * rhs2_;
  advection_rhs(stage_, rhs3_);
  stage_ = state + dt * rhs3_;
  advection_rhs(stage_, rhs4_);
  state += (dt / 6.0) * (rhs1_ + 2.0 * rhs2_ + 2.0 * rhs3_ + rhs4_);

  dispersion_half_step(state);

  if (!state.allFinite()) {
    throw BlowupError("KdvPlant::step: state became non-finite");
  }
}

Eigen::VectorXd kdv_step(const KdvConfig& config, Eigen::VectorXd state,
                         const Eigen::Ref<const Eigen::VectorXd>& input) {
  KdvPlant plant(config);
  plant.step(state, input);
  return state;
}

}  // namespace koopmpc::kdv
