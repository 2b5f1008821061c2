#include "noise_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace tamperid {

NoiseModel NoiseModel::gaussian(double mean, double variance) {
  if (!std::isfinite(mean)) throw ConfigError("noise.mean", "noise mean must be finite");
  if (!std::isfinite(variance) || variance <= 0.0)
    throw ConfigError("noise.variance", "noise variance must be finite and > 0");
  return NoiseModel(Kind::gaussian, mean, std::sqrt(variance));
}

double NoiseModel::cdf(double x) const {
  if (std::isnan(x)) return x;
  // erfc keeps full relative accuracy in the lower tail, where 1 + erf would
  // cancel.
  return 0.5 * std::erfc(-(x - mean_) / (sd_ * std::numbers::sqrt2));
}

double NoiseModel::pdf(double x) const {
  if (std::isinf(x)) return 0.0;
  const double z = (x - mean_) / sd_;
  return std::exp(-0.5 * z * z) / (sd_ * std::sqrt(2.0 * std::numbers::pi));
}

double NoiseModel::density_inf(double radius) const {
  if (!std::isfinite(radius) || radius < 0.0)
    throw NumericalError("density_inf: radius must be finite and >= 0");
  // Unimodal: the infimum over an interval sits at one of its endpoints.
  const double inf = std::min(pdf(-radius), pdf(radius));
  if (!(inf >= kMinUsableDensity)) {
    std::ostringstream os;
    os << "noise density vanishes on [-" << radius << ", " << radius << "] (inf = " << inf << ")";
    throw NumericalError(os.str());
  }
  return inf;
}

std::string NoiseModel::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "gaussian(mean=" << mean_ << ", variance=" << variance() << ")";
  return os.str();
}

}  // namespace tamperid
