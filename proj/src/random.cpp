#include "epsts/random.hpp"

namespace epsts {

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::Design: return "design";
    case Stream::Noise: return "noise";
    case Stream::Hyper: return "hyper";
    case Stream::Switch: return "switch";
    case Stream::Spectral: return "spectral";
    case Stream::Weights: return "weights";
    case Stream::Dedup: return "dedup";
  }
  return "unknown";
}

Rng make_stream(std::uint64_t seed, Stream s) {
  const auto tag = static_cast<std::uint64_t>(s);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), 0x9e3779b9u};
  return Rng(seq);
}

TrialStreams::TrialStreams(std::uint64_t seed)
    : design(make_stream(seed, Stream::Design)),
      noise(make_stream(seed, Stream::Noise)),
      hyper(make_stream(seed, Stream::Hyper)),
      switch_draw(make_stream(seed, Stream::Switch)),
      spectral(make_stream(seed, Stream::Spectral)),
      weights(make_stream(seed, Stream::Weights)),
      dedup(make_stream(seed, Stream::Dedup)) {}

}  // namespace epsts
