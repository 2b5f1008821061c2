#pragma once

#include <cstdint>
#include <set>

#include "plant.hpp"

namespace tamperid {

enum class Probe { none, send_zero, send_one };

// Periodic extra-insertion schedule: within every period of length T, slots in
// `zero_slots` carry a known 0 and slots in `one_slots` a known 1.
class InsertionSchedule {
 public:
  InsertionSchedule(int period, std::set<int> zero_slots, std::set<int> one_slots);

  int period() const noexcept { return period_; }
  const std::set<int>& zero_slots() const noexcept { return zero_slots_; }
  const std::set<int>& one_slots() const noexcept { return one_slots_; }

  // Probe to insert after the data bit of step k (k >= 1).
  Probe plan(std::int64_t k) const;

 private:
  int period_;
  std::set<int> zero_slots_;
  std::set<int> one_slots_;
};

// Running probe counts and the sample-frequency estimates of (p, q). Before the
// first probe of a kind arrives the matching estimate is 0.
class DefenseState {
 public:
  void ingest(Bit sent, Bit received);

  std::int64_t zero_probes() const noexcept { return zero_probes_; }
  std::int64_t zero_received_one() const noexcept { return zero_received_one_; }
  std::int64_t one_probes() const noexcept { return one_probes_; }
  std::int64_t one_flipped() const noexcept { return one_flipped_; }

  double p_hat() const noexcept { return p_hat_; }
  double q_hat() const noexcept { return q_hat_; }
  FlipProbabilities estimate() const noexcept { return {p_hat_, q_hat_}; }

  // At least `min_probes` probes of each kind have been received.
  bool warmed_up(std::int64_t min_probes = 1) const noexcept {
    return zero_probes_ >= min_probes && one_probes_ >= min_probes;
  }

 private:
  std::int64_t zero_probes_ = 0;
  std::int64_t zero_received_one_ = 0;
  std::int64_t one_probes_ = 0;
  std::int64_t one_flipped_ = 0;
  double p_hat_ = 0.0;
  double q_hat_ = 0.0;
};

// sqrt(log log k / k), the iterated-logarithm rate of the frequency estimates.
// Throws std::domain_error for k < 3.
double lil_envelope(double k);

}  // namespace tamperid
