#include "gradient_estimator.hpp"

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace tamperid {

GradientEstimator::GradientEstimator(GradientSettings settings, ConstraintSet set, NoiseSchedule noise,
                                     AttackSource attack)
    : settings_(std::move(settings)), set_(std::move(set)), noise_(std::move(noise)), attack_(attack) {
  if (!(settings_.beta > 0.0) || !std::isfinite(settings_.beta))
    throw ConfigError("grad.beta", "grad.beta must be finite and > 0");
  if (!(settings_.gamma > 0.5 && settings_.gamma <= 1.0))
    throw ConfigError("grad.gamma", "grad.gamma must lie in (1/2, 1]");
  if (!std::isfinite(settings_.threshold)) throw ConfigError("sensor.C", "sensor threshold must be finite");
  if (settings_.theta0.size() != set_.dim())
    throw ConfigError("grad.theta0", "grad.theta0 dimension does not match the parameter set");
  if (!set_.contains(settings_.theta0)) throw ConfigError("grad.theta0", "grad.theta0 must lie in the parameter set");
  theta_ = settings_.theta0;
}

double GradientEstimator::raw_innovation(const Vector& phi, Bit received, const FlipProbabilities& flips) const {
  const double c = flips.contrast();
  const double f = noise_.at(k_).cdf(settings_.threshold - theta_.dot(phi));
  return settings_.beta * c * (c * f + flips.q - to_int(received));
}

double GradientEstimator::innovation(const Vector& phi, Bit received, const FlipProbabilities& flips) const {
  if (phi.size() != theta_.size()) throw DimensionError("regressor dimension does not match the estimate");
  if (flips.degenerate())
    throw ConfigError("channel.p+channel.q", "innovation undefined for p + q = 1");
  return raw_innovation(phi, received, flips);
}

double GradientEstimator::step_size() const {
  return settings_.gamma == 1.0 ? 1.0 / static_cast<double>(k_)
                                : std::pow(static_cast<double>(k_), -settings_.gamma);
}

void GradientEstimator::update(const Vector& phi, Bit received) {
  if (phi.size() != theta_.size()) throw DimensionError("regressor dimension does not match the estimate");
  const FlipProbabilities flips = attack_.current();
  // Live estimates may sit exactly on p + q = 1 early on; the factor c then
  // zeroes the innovation and the step is skipped.
  if (attack_.is_estimated()) last_innovation_ = raw_innovation(phi, received, flips);
  else last_innovation_ = innovation(phi, received, flips);
  if (last_innovation_ != 0.0) theta_ = project_euclidean(set_, theta_ + step_size() * last_innovation_ * phi);
  ++k_;
}

double gradient_density_floor(const NoiseModel& noise, double threshold, double bound_m, double bound_b) {
  const double radius = std::abs(threshold) + bound_m * bound_b;
  const double f = std::min(noise.pdf(-radius), noise.pdf(radius));
  return f;
}

double gradient_gain_threshold(const FlipProbabilities& flips, double density_floor, double delta) {
  const double c = flips.contrast();
  const double denom = 2.0 * c * c * density_floor * delta;
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / denom;
}

}  // namespace tamperid
