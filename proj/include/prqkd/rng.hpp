#pragma once

#include <cstdint>
#include <random>

namespace prqkd {

using Rng = std::mt19937_64;

// Independent substreams derived from one session seed. Adding draws to one
// role never shifts the sequence seen by another.
enum class Stream : std::uint64_t {
  Pattern = 1,
  Basis = 2,
  Noise = 3,
  Detection = 4,
  Polarization = 5,
};

// SplitMix64 finalizer over the pair; used for substreams and per-point scan seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

Rng make_stream(std::uint64_t seed, Stream role);

}  // namespace prqkd
