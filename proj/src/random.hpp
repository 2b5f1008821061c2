#pragma once

#include <cstdint>
#include <random>

namespace tamperid {

using Rng = std::mt19937_64;

// Independent stream identifiers. Each replica owns one generator per stream so
// that e.g. changing the flip probabilities never perturbs the noise path.
enum class Stream : std::uint64_t {
  noise = 1,
  channel = 2,
  input = 3,
  control = 4,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t replica, Stream stream) {
  return splitmix64(splitmix64(splitmix64(base) ^ replica) ^ static_cast<std::uint64_t>(stream));
}

}  // namespace tamperid
