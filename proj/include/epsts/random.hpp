#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace epsts {

using Rng = std::mt19937_64;

// Independent random streams owned by one trial. Each stream is seeded from
// (trial seed, stream tag) so that consuming one never shifts another. The policy-facing streams (Switch, Spectral, Weights) are what
// make the epsilon = 0 / epsilon = 1 equivalences hold bit-for-bit.
enum class Stream : std::uint64_t {
  Design = 1,  // initial Latin-hypercube design
  Noise,       // observation noise
  Hyper,       // multi-start hyperparameter guesses
  Switch,      // epsilon-greedy branch draw
  Spectral,    // random-feature frequencies and phases
  Weights,     // sample-path weight draws
  Dedup,       // duplicate-point perturbation
};

std::string_view stream_name(Stream s);

Rng make_stream(std::uint64_t seed, Stream s);

// Uniform on [0, 1) with 53 random bits; independent of the standard
// library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct TrialStreams {
  explicit TrialStreams(std::uint64_t seed);

  Rng design;
  Rng noise;
  Rng hyper;
  Rng switch_draw;
  Rng spectral;
  Rng weights;
  Rng dedup;
};

}  // namespace epsts
