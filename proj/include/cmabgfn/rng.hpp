#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cmabgfn {

using Rng = std::mt19937_64;

// Stream splitting. A child seed is a SplitMix64 finalisation of the parent
// seed mixed with the FNV-1a hash of a label and an integer index:
//
//   child = mix(parent ^ mix(fnv1a(label) + 0x9e3779b97f4a7c15 * (index + 1)))
//
// Every random draw in a run comes from a stream derived this way from the
// master seed, e.g. derive_seed(master, "bandit", 0) or
// derive_seed(round_seed, "traj", b) for trajectory b of a batch.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t parent, std::string_view label,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(parent, label, index));
}

// Portable uniform draws (std distributions are implementation-defined).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection; n >= 1.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

// Standard normal by Box-Muller (two uniforms per call).
double normal01(Rng& rng);

// Gamma(shape, 1) by Marsaglia-Tsang; shape > 0.
double gamma_sample(Rng& rng, double shape);

}  // namespace cmabgfn
