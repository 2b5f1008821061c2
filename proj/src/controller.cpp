#include "controller.hpp"

#include <cmath>
#include <numbers>

#include "errors.hpp"

namespace tamperid {

ReferenceSignal ReferenceSignal::sinusoid(double amplitude, double period) {
  if (!std::isfinite(amplitude))
    throw ConfigError("control.reference.amplitude", "reference amplitude must be finite");
  if (!(period > 0.0) || !std::isfinite(period))
    throw ConfigError("control.reference.period", "reference period must be finite and > 0");
  return ReferenceSignal(Kind::sinusoid, amplitude, period);
}

ReferenceSignal ReferenceSignal::constant(double value) {
  if (!std::isfinite(value)) throw ConfigError("control.reference.value", "reference value must be finite");
  return ReferenceSignal(Kind::constant, value, 0.0);
}

double ReferenceSignal::at(std::int64_t k) const {
  if (kind_ == Kind::constant) return a_;
  return a_ * std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / b_);
}

Controller::Controller(Eigen::Index dim, std::deque<double> initial_inputs, double input_clamp,
                       double theta1_floor)
    : dim_(dim), history_(std::move(initial_inputs)), clamp_(input_clamp), floor_(theta1_floor) {
  if (dim_ < 1) throw ConfigError("plant.theta", "regressor dimension must be >= 1");
  if (static_cast<Eigen::Index>(history_.size()) != dim_ - 1)
    throw DimensionError("controller needs exactly p - 1 past inputs");
  if (!(clamp_ > 0.0) || !std::isfinite(clamp_))
    throw ConfigError("control.input_clamp", "control.input_clamp must be finite and > 0");
  if (!(floor_ > 0.0) || !std::isfinite(floor_))
    throw ConfigError("control.theta1_floor", "control.theta1_floor must be finite and > 0");
}

ControlAction Controller::control(const Vector& theta_hat, const NoiseModel& noise, double y_star_next) {
  if (theta_hat.size() != dim_) throw DimensionError("estimate dimension does not match the controller");
  ControlAction out;
  double numer = y_star_next - noise.mean();
  for (Eigen::Index i = 1; i < dim_; ++i) numer -= theta_hat(i) * history_[static_cast<std::size_t>(i - 1)];

  double divisor = theta_hat(0);
  if (std::abs(divisor) < floor_) {
    divisor = (divisor < 0.0 ? -1.0 : 1.0) * floor_;
    out.guarded = true;
  }
  out.u = numer / divisor;
  if (std::abs(out.u) > clamp_) {
    out.u = std::copysign(clamp_, out.u);
    out.guarded = true;
  }
  if (out.guarded) ++guarded_;

  out.phi.resize(dim_);
  out.phi(0) = out.u;
  for (Eigen::Index i = 1; i < dim_; ++i) out.phi(i) = history_[static_cast<std::size_t>(i - 1)];
  if (dim_ > 1) {
    history_.push_front(out.u);
    history_.pop_back();
  }
  return out;
}

double tracking_cost(std::span<const double> ys, std::span<const double> y_stars) {
  if (ys.size() != y_stars.size()) throw DimensionError("tracking_cost: sequences differ in length");
  if (ys.empty()) throw DimensionError("tracking_cost: empty sequence");
  double sum = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) sum += (ys[i] - y_stars[i]) * (ys[i] - y_stars[i]);
  return sum / static_cast<double>(ys.size());
}

}  // namespace tamperid
