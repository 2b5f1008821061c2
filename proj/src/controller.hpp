#pragma once

#include <cstdint>
#include <deque>
#include <span>

#include "noise_model.hpp"
#include "plant.hpp"

namespace tamperid {

// Bounded reference trajectory y*_k.
class ReferenceSignal {
 public:
  enum class Kind { sinusoid, constant };

  static ReferenceSignal sinusoid(double amplitude, double period);
  static ReferenceSignal constant(double value);

  Kind kind() const noexcept { return kind_; }
  double at(std::int64_t k) const;

 private:
  ReferenceSignal(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

struct ControlAction {
  double u = 0.0;
  Vector phi;
  bool guarded = false;  // divisor floor or saturation engaged
};

// Certainty-equivalence tracking law for an FIR plant with regressor
// phi_k = [u_k, u_{k-1}, ..., u_{k-p+1}]: picks u_k such that
// theta_hat' phi_k + E[w] = y*_{k+1}.
class Controller {
 public:
  // `initial_inputs` holds u_{k-1}, ..., u_{k-p+1} (most recent first).
  Controller(Eigen::Index dim, std::deque<double> initial_inputs, double input_clamp, double theta1_floor);

  ControlAction control(const Vector& theta_hat, const NoiseModel& noise, double y_star_next);

  double input_clamp() const noexcept { return clamp_; }
  double theta1_floor() const noexcept { return floor_; }
  const std::deque<double>& history() const noexcept { return history_; }
  std::int64_t guarded_steps() const noexcept { return guarded_; }

 private:
  Eigen::Index dim_;
  std::deque<double> history_;
  double clamp_;
  double floor_;
  std::int64_t guarded_ = 0;
};

// J_n = (1/n) sum (y - y*)^2
double tracking_cost(std::span<const double> ys, std::span<const double> y_stars);

}  // namespace tamperid
