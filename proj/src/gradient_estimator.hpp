#pragma once

#include <cstdint>

#include "attack.hpp"
#include "noise_model.hpp"
#include "projection.hpp"

namespace tamperid {

struct GradientSettings {
  double beta = 80.0;   // innovation gain
  double gamma = 1.0;   // step sizes b_k = k^-gamma, gamma in (1/2, 1]
  double threshold = 1.0;
  Vector theta0;
};

// First-order recursive projection estimator driven by tampered binary
// observations:
//   s~ = beta c ( c F(C - theta^' phi) + q - s ),  c = 1 - (p + q)
//   theta <- Pi(theta + b_k phi s~)
// With a known attack source this is the known-probability variant; with an
// estimated source (p, q) are read from the defense state at each update.
class GradientEstimator {
 public:
  GradientEstimator(GradientSettings settings, ConstraintSet set, NoiseSchedule noise, AttackSource attack);

  // Innovation for explicit (p, q); throws ConfigError if p + q = 1.
  double innovation(const Vector& phi, Bit received, const FlipProbabilities& flips) const;
  double step_size() const;

  void update(const Vector& phi, Bit received);

  const Vector& theta() const noexcept { return theta_; }
  std::int64_t step_index() const noexcept { return k_; }
  double last_innovation() const noexcept { return last_innovation_; }
  const GradientSettings& settings() const noexcept { return settings_; }
  const ConstraintSet& constraint_set() const noexcept { return set_; }

 private:
  double raw_innovation(const Vector& phi, Bit received, const FlipProbabilities& flips) const;

  GradientSettings settings_;
  ConstraintSet set_;
  NoiseSchedule noise_;
  AttackSource attack_;
  Vector theta_;
  std::int64_t k_ = 1;
  double last_innovation_ = 0.0;
};

// Lower density bound over |x| <= C + M B used by the rate condition.
double gradient_density_floor(const NoiseModel& noise, double threshold, double bound_m, double bound_b);

// beta must exceed 1 / (2 c^2 f delta) for the 1/k mean-square rate at gamma = 1.
double gradient_gain_threshold(const FlipProbabilities& flips, double density_floor, double delta);

}  // namespace tamperid
