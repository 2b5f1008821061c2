#pragma once

#include <cstdint>
#include <optional>

#include "attack.hpp"
#include "noise_model.hpp"
#include "projection.hpp"

namespace tamperid {

struct NewtonSettings {
  Vector theta0;
  double p1_scale = 1.0;  // P_1 = p1_scale * I
  double threshold = 1.0;
  // Radius of the interval on which the density infimum behind beta_k is
  // taken. Unset means L M + |C| with L = sup norm of the parameter set.
  std::optional<double> density_radius;
  double bound_m = 1.0;
  // With an estimated attack source, beta_k is not ratcheted (running minimum)
  // until this many probes of each kind have been seen.
  std::int64_t ratchet_warmup = 100;
  // Cross-check of the accumulated log det(P^-1) against a factorisation.
  std::int64_t logdet_check_stride = 1000;
  double logdet_tolerance = 1e-6;
};

// Second-order (quasi-Newton) recursive projection estimator:
//   beta_k = sign(c) min(|beta_{k-1}|, |c| inf_{|x|<=R} f(x))
//   a_k    = 1 / (1 + beta_k^2 phi' P phi)
//   s~     = c F(C - theta' phi) + q - s
//   P     <- P - beta_k^2 a_k P phi phi' P
//   theta <- Pi_{P^-1}(theta + a_k beta_k P phi s~)
// P^-1 is kept alongside P (rank-one update) and serves as the projection
// weight; log det P^-1 accumulates via the matrix determinant lemma.
class NewtonEstimator {
 public:
  NewtonEstimator(NewtonSettings settings, ConstraintSet set, NoiseSchedule noise, AttackSource attack);

  // Candidate beta_k for the given (p, q), from the stored |beta_{k-1}|.
  double beta_step(const FlipProbabilities& flips) const;
  double gain_scalar(const Vector& phi, double beta) const;
  double gain_scalar(const Vector& phi) const { return gain_scalar(phi, beta_); }
  // Unscaled innovation; lies in [-1, 1].
  double innovation(const Vector& phi, Bit received, const FlipProbabilities& flips) const;

  void update(const Vector& phi, Bit received);

  const Vector& theta() const noexcept { return theta_; }
  const Matrix& gain() const noexcept { return p_; }
  const Matrix& gain_inverse() const noexcept { return p_inv_; }
  double logdet_gain_inverse() const noexcept { return logdet_p_inv_; }
  // beta_{k-1}: the value used by the most recent update (beta_0 before any).
  double beta() const noexcept { return beta_; }
  double density_radius() const noexcept { return radius_; }
  std::int64_t step_index() const noexcept { return k_; }
  std::int64_t gain_repairs() const noexcept { return repairs_; }
  const NewtonSettings& settings() const noexcept { return settings_; }

  // Extreme eigenvalues of P^-1 (computed on demand).
  std::pair<double, double> inverse_eigen_extremes() const;
  // log det P^-1 by Cholesky of the shadow inverse.
  double direct_logdet() const;

 private:
  double density_term(const FlipProbabilities& flips, std::int64_t k) const;

  NewtonSettings settings_;
  ConstraintSet set_;
  NoiseSchedule noise_;
  AttackSource attack_;
  double radius_;
  Vector theta_;
  Matrix p_;
  Matrix p_inv_;
  double logdet_p_inv_;
  double beta_;
  bool ratchet_started_ = false;
  std::int64_t k_ = 1;
  std::int64_t repairs_ = 0;
};

}  // namespace tamperid
