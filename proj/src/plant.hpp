#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "noise_model.hpp"
#include "random.hpp"

namespace tamperid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Bit : std::uint8_t { zero = 0, one = 1 };

inline int to_int(Bit b) noexcept { return static_cast<int>(b); }
inline Bit to_bit(bool b) noexcept { return b ? Bit::one : Bit::zero; }

// Tolerance used to reject the unidentifiable channel p + q = 1.
inline constexpr double kIdentifiabilityTol = 1e-9;

// Flip law of the channel: p = P(1 -> 0), q = P(0 -> 1).
struct FlipProbabilities {
  double p = 0.0;
  double q = 0.0;

  // 1 - (p + q), the factor that scales every innovation.
  double contrast() const noexcept { return 1.0 - (p + q); }
  bool degenerate() const noexcept;
  // Throws ConfigError unless p, q in [0, 1) and p + q != 1.
  void validate() const;
};

// y_{k+1} = phi_k' theta + w_{k+1}
class FirPlant {
 public:
  FirPlant(Vector theta, NoiseModel noise, std::uint64_t seed);

  Eigen::Index dim() const noexcept { return theta_.size(); }
  const Vector& theta() const noexcept { return theta_; }
  const NoiseModel& noise() const noexcept { return noise_; }

  // Deterministic output for a given noise sample.
  double output(const Vector& phi, double w) const;
  // Draws w from the plant's own stream.
  double step(const Vector& phi);
  double last_noise() const noexcept { return last_noise_; }

 private:
  Vector theta_;
  NoiseModel noise_;
  Rng rng_;
  std::normal_distribution<double> std_normal_;
  double last_noise_ = 0.0;
};

class BinarySensor {
 public:
  explicit BinarySensor(double threshold);
  double threshold() const noexcept { return threshold_; }
  // 1 iff y <= C.
  Bit sense(double y) const noexcept { return to_bit(y <= threshold_); }

 private:
  double threshold_;
};

class TamperChannel {
 public:
  TamperChannel(FlipProbabilities flips, std::uint64_t seed);

  const FlipProbabilities& flips() const noexcept { return flips_; }
  // Exactly one uniform draw per transmitted bit, whatever the bit or law.
  Bit transmit(Bit sent);

 private:
  FlipProbabilities flips_;
  Rng rng_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// P(s = 0 | F_k) = (p + q - 1) F(margin) + 1 - q, margin = C - theta' phi.
double tampered_zero_prob(const FlipProbabilities& flips, const NoiseModel& noise, double margin);

// Law of the scalar input u_k feeding an FIR regressor window.
struct InputLaw {
  enum class Kind { gaussian, uniform };
  Kind kind = Kind::gaussian;
  double variance = 1.0;
  // Standard deviation scales as k^(-decay); 0 keeps the law stationary.
  double variance_decay = 0.0;

  double stddev_at(std::int64_t k) const;
};

// Produces phi_k = [u_k, u_{k-1}, ..., u_{k-p+1}] from an input law, or reads
// phi_k from an external stream. Vectors with norm above bound_M are counted,
// not rejected.
class RegressorSource {
 public:
  using External = std::function<Vector(std::int64_t)>;

  static RegressorSource fir_window(Eigen::Index dim, InputLaw law, double bound_m, std::uint64_t seed);
  static RegressorSource external(External stream, double bound_m);

  Vector next(std::int64_t k);
  double bound() const noexcept { return bound_m_; }
  std::int64_t bound_violations() const noexcept { return violations_; }
  // Records a vector produced elsewhere (e.g. by a controller) against the bound.
  void observe(const Vector& phi);

 private:
  RegressorSource(double bound_m) : bound_m_(bound_m) {}
  double draw_input(std::int64_t k);

  double bound_m_;
  std::int64_t violations_ = 0;
  std::optional<InputLaw> law_;
  Eigen::Index dim_ = 0;
  std::deque<double> history_;
  Rng rng_;
  std::normal_distribution<double> std_normal_;
  std::uniform_real_distribution<double> uniform_{-1.0, 1.0};
  External external_;
};

}  // namespace tamperid
