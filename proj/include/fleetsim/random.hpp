#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fleetsim {

using Rng = std::mt19937_64;

// Derives an independent seed for a named stream from the master seed, so that
// enabling or disabling one consumer of randomness leaves the others untouched.
std::uint64_t stream_seed(std::uint64_t master, std::string_view stream);

inline Rng make_stream(std::uint64_t master, std::string_view stream) {
  return Rng(stream_seed(master, stream));
}

// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
  return std::generate_canonical<double, 53>(rng);
}

// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace fleetsim
