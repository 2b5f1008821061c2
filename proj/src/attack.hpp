#pragma once

#include <variant>

#include "defense.hpp"
#include "plant.hpp"

namespace tamperid {

// Where an estimator reads (p, q) from: fixed known values, or the live
// estimates of a defense state owned elsewhere (read at update time).
class AttackSource {
 public:
  static AttackSource known(FlipProbabilities flips) {
    flips.validate();
    return AttackSource(flips);
  }
  static AttackSource estimated(const DefenseState& defense) { return AttackSource(&defense); }

  bool is_estimated() const noexcept { return std::holds_alternative<const DefenseState*>(src_); }
  FlipProbabilities current() const noexcept {
    if (auto* d = std::get_if<const DefenseState*>(&src_)) return (*d)->estimate();
    return std::get<FlipProbabilities>(src_);
  }
  const DefenseState* defense() const noexcept {
    auto* d = std::get_if<const DefenseState*>(&src_);
    return d ? *d : nullptr;
  }

 private:
  explicit AttackSource(FlipProbabilities f) : src_(f) {}
  explicit AttackSource(const DefenseState* d) : src_(d) {}

  std::variant<FlipProbabilities, const DefenseState*> src_;
};

}  // namespace tamperid
