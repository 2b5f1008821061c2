#include "plant.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace tamperid {

bool FlipProbabilities::degenerate() const noexcept {
  return std::abs(contrast()) <= kIdentifiabilityTol;
}

void FlipProbabilities::validate() const {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("channel.p", "channel.p must lie in [0, 1)");
  if (!(q >= 0.0 && q < 1.0)) throw ConfigError("channel.q", "channel.q must lie in [0, 1)");
  if (degenerate())
    throw ConfigError("channel.p+channel.q",
                      "channel.p + channel.q = 1 makes the parameter unidentifiable");
}

FirPlant::FirPlant(Vector theta, NoiseModel noise, std::uint64_t seed)
    : theta_(std::move(theta)), noise_(noise), rng_(seed) {
  if (theta_.size() < 1) throw ConfigError("plant.theta", "plant.theta must have at least one entry");
  if (!theta_.allFinite()) throw ConfigError("plant.theta", "plant.theta must be finite");
}

double FirPlant::output(const Vector& phi, double w) const {
  if (phi.size() != theta_.size()) {
    std::ostringstream os;
    os << "regressor has dimension " << phi.size() << ", plant expects " << theta_.size();
    throw DimensionError(os.str());
  }
  return phi.dot(theta_) + w;
}

double FirPlant::step(const Vector& phi) {
  last_noise_ = noise_.from_standard(std_normal_(rng_));
  return output(phi, last_noise_);
}

BinarySensor::BinarySensor(double threshold) : threshold_(threshold) {
  if (!std::isfinite(threshold)) throw ConfigError("sensor.C", "sensor threshold must be finite");
}

TamperChannel::TamperChannel(FlipProbabilities flips, std::uint64_t seed) : flips_(flips), rng_(seed) {
  flips_.validate();
}

Bit TamperChannel::transmit(Bit sent) {
  const double u = uniform_(rng_);
  if (sent == Bit::one) return u < flips_.p ? Bit::zero : Bit::one;
  return u < flips_.q ? Bit::one : Bit::zero;
}

double tampered_zero_prob(const FlipProbabilities& flips, const NoiseModel& noise, double margin) {
  return (flips.p + flips.q - 1.0) * noise.cdf(margin) + 1.0 - flips.q;
}

double InputLaw::stddev_at(std::int64_t k) const {
  const double sd = std::sqrt(variance);
  if (variance_decay == 0.0) return sd;
  return sd * std::pow(static_cast<double>(std::max<std::int64_t>(k, 1)), -variance_decay);
}

RegressorSource RegressorSource::fir_window(Eigen::Index dim, InputLaw law, double bound_m,
                                            std::uint64_t seed) {
  if (dim < 1) throw ConfigError("plant.theta", "regressor dimension must be >= 1");
  if (!(law.variance > 0.0) || !std::isfinite(law.variance))
    throw ConfigError("input.variance", "input.variance must be finite and > 0");
  if (!std::isfinite(law.variance_decay) || law.variance_decay < 0.0)
    throw ConfigError("input.variance_decay", "input.variance_decay must be finite and >= 0");
  if (!(bound_m > 0.0)) throw ConfigError("input.bound_M", "input.bound_M must be > 0");
  RegressorSource src(bound_m);
  src.law_ = law;
  src.dim_ = dim;
  src.rng_.seed(seed);
  // u_0, u_{-1}, ... drawn from the k = 1 law.
  for (Eigen::Index i = 1; i < dim; ++i) src.history_.push_back(src.draw_input(1));
  return src;
}

RegressorSource RegressorSource::external(External stream, double bound_m) {
  if (!(bound_m > 0.0)) throw ConfigError("input.bound_M", "input.bound_M must be > 0");
  RegressorSource src(bound_m);
  src.external_ = std::move(stream);
  return src;
}

double RegressorSource::draw_input(std::int64_t k) {
  const double sd = law_->stddev_at(k);
  if (law_->kind == InputLaw::Kind::gaussian) return sd * std_normal_(rng_);
  // Uniform on [-a, a] has variance a^2 / 3.
  return sd * std::sqrt(3.0) * uniform_(rng_);
}

Vector RegressorSource::next(std::int64_t k) {
  Vector phi;
  if (external_) {
    phi = external_(k);
  } else {
    phi.resize(dim_);
    phi(0) = draw_input(k);
    for (Eigen::Index i = 1; i < dim_; ++i) phi(i) = history_[static_cast<std::size_t>(i - 1)];
    if (dim_ > 1) {
      history_.push_front(phi(0));
      history_.pop_back();
    }
  }
  observe(phi);
  return phi;
}

void RegressorSource::observe(const Vector& phi) {
  if (phi.norm() > bound_m_) ++violations_;
}

}  // namespace tamperid
