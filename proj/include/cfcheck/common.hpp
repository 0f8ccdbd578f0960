#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace cfcheck {

using Rng = std::mt19937_64;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Trace is not a realization of the model; `position` is the 1-based path
/// position of the offending step (0 when unknown).
struct TraceError : Error {
  TraceError(const std::string& msg, int position)
      : Error(msg), position(position) {}
  int position = 0;
};

struct HorizonError : Error {
  using Error::Error;
};

/// splitmix64 finalizer; used to derive independent RNG substreams from
/// (master seed, stream index) so results do not depend on scheduling.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(seed, stream));
}

}  // namespace cfcheck
