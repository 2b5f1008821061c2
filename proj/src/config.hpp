#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "controller.hpp"
#include "defense.hpp"
#include "gradient_estimator.hpp"
#include "newton_estimator.hpp"
#include "noise_model.hpp"
#include "plant.hpp"
#include "projection.hpp"

namespace tamperid {

// Flat key=value configuration. Every recognised key has a default; setting an
// unknown key is an error.
class ConfigMap {
 public:
  ConfigMap();  // all defaults

  static ConfigMap from_text(const std::string& text);
  static ConfigMap from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  // Parses "key=value".
  void apply_override(const std::string& assignment);
  const std::string& get(const std::string& key) const;
  bool has_key(const std::string& key) const { return values_.contains(key); }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  const std::vector<std::string>& overridden() const noexcept { return overridden_; }
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> overridden_;
};

enum class Algorithm { grp_kp, grp_up, nrp_kp, nrp_up };

std::string to_string(Algorithm a);
bool is_newton(Algorithm a) noexcept;
bool uses_defense(Algorithm a) noexcept;

enum class EnvelopeKind { power_rate, log_over_power, regret_rate, lil_rate };

struct EnvelopeSpec {
  EnvelopeKind kind = EnvelopeKind::power_rate;
  double exponent = 1.0;
};

std::string to_string(EnvelopeKind k);

struct ControlConfig {
  bool enabled = false;
  ReferenceSignal reference = ReferenceSignal::constant(0.0);
  double theta1_floor = 1e-3;
  double input_clamp = 50.0;
  double u0_variance = 1.0;
};

// Typed, validated experiment description.
struct ExperimentConfig {
  std::string name;
  Algorithm algorithm = Algorithm::grp_kp;
  std::int64_t horizon = 0;
  std::int64_t replicas = 1;
  std::int64_t metrics_stride = 10;
  std::uint64_t base_seed = 0;

  Vector theta;
  NoiseModel noise = NoiseModel::gaussian(0.0, 1.0);
  double threshold = 1.0;
  FlipProbabilities flips;
  InputLaw input;
  double bound_m = 1.0;
  ConstraintSet theta_set = ConstraintSet::box(Vector::Zero(1), Vector::Zero(1));

  GradientSettings grad;
  double excitation_delta = 1.0;
  std::int64_t excitation_h = 1;
  NewtonSettings newton;
  std::int64_t eig_stride = 100;

  int defense_period = 20;
  std::set<int> slots_zero;
  std::set<int> slots_one;

  ControlConfig control;
  EnvelopeSpec envelope;

  InsertionSchedule schedule() const { return InsertionSchedule(defense_period, slots_zero, slots_one); }
};

// Throws ConfigError naming the offending key.
ExperimentConfig parse_experiment(const ConfigMap& map);

// Names of the shipped presets and the runs each expands to.
std::vector<std::string> preset_names();
std::vector<ConfigMap> preset_runs(const std::string& name);

}  // namespace tamperid
