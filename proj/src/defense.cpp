#include "defense.hpp"

#include <cmath>
#include <stdexcept>

#include "errors.hpp"

namespace tamperid {

InsertionSchedule::InsertionSchedule(int period, std::set<int> zero_slots, std::set<int> one_slots)
    : period_(period), zero_slots_(std::move(zero_slots)), one_slots_(std::move(one_slots)) {
  if (period_ < 1) throw ConfigError("defense.T", "defense.T must be >= 1");
  if (zero_slots_.empty()) throw ConfigError("defense.slots_zero", "defense.slots_zero must be non-empty");
  if (one_slots_.empty()) throw ConfigError("defense.slots_one", "defense.slots_one must be non-empty");
  for (int s : zero_slots_) {
    if (s < 1 || s > period_) throw ConfigError("defense.slots_zero", "slot indices must lie in [1, T]");
    if (one_slots_.contains(s))
      throw ConfigError("defense.slots_zero+defense.slots_one", "probe slot sets must be disjoint");
  }
  for (int s : one_slots_)
    if (s < 1 || s > period_) throw ConfigError("defense.slots_one", "slot indices must lie in [1, T]");
}

Probe InsertionSchedule::plan(std::int64_t k) const {
  if (k < 1) return Probe::none;
  const int slot = static_cast<int>((k - 1) % period_) + 1;
  if (zero_slots_.contains(slot)) return Probe::send_zero;
  if (one_slots_.contains(slot)) return Probe::send_one;
  return Probe::none;
}

void DefenseState::ingest(Bit sent, Bit received) {
  if (sent == Bit::zero) {
    ++zero_probes_;
    if (received == Bit::one) ++zero_received_one_;
    q_hat_ = static_cast<double>(zero_received_one_) / static_cast<double>(zero_probes_);
  } else {
    ++one_probes_;
    if (received == Bit::zero) ++one_flipped_;
    p_hat_ = static_cast<double>(one_flipped_) / static_cast<double>(one_probes_);
  }
}

double lil_envelope(double k) {
  if (!(k >= 3.0)) throw std::domain_error("lil_envelope requires k >= 3");
  return std::sqrt(std::log(std::log(k)) / k);
}

}  // namespace tamperid
