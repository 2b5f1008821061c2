#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace tamperid {

// Densities below this are treated as vanishing: a gain built from them would
// freeze the estimator.
inline constexpr double kMinUsableDensity = 1e-36;

// Conditional law of the plant noise w_{k+1}. Only the Gaussian family is
// provided; the class is immutable and cheap to copy.
class NoiseModel {
 public:
  enum class Kind { gaussian };

  static NoiseModel gaussian(double mean, double variance);

  Kind kind() const noexcept { return kind_; }
  double cdf(double x) const;
  double pdf(double x) const;
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return sd_ * sd_; }

  // Infimum of the density over [-radius, radius]. Throws NumericalError when
  // the infimum is below kMinUsableDensity.
  double density_inf(double radius) const;

  // Maps a standard normal draw onto this law.
  double from_standard(double z) const noexcept { return mean_ + sd_ * z; }
  std::string describe() const;

 private:
  NoiseModel(Kind kind, double mean, double sd) : kind_(kind), mean_(mean), sd_(sd) {}

  Kind kind_;
  double mean_;
  double sd_;
};

// Per-step noise law F_k. The experiments only use a stationary law, but the
// estimators query the schedule by step index.
class NoiseSchedule {
 public:
  using Generator = std::function<NoiseModel(std::int64_t)>;

  explicit NoiseSchedule(NoiseModel stationary) : stationary_(stationary) {}
  NoiseSchedule(NoiseModel first, Generator gen) : stationary_(first), gen_(std::move(gen)) {}

  NoiseModel at(std::int64_t k) const { return gen_ ? gen_(k) : stationary_; }
  bool stationary() const noexcept { return !gen_; }

 private:
  NoiseModel stationary_;
  Generator gen_;
};

}  // namespace tamperid
