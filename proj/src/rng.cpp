#include "vpidm/rng.hpp"

#include <cmath>

namespace vpidm {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

double Rng::uniform() { return uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

Complex Rng::complex_normal() {
  static const double kHalfSd = std::sqrt(0.5);
  ++complex_draws_;
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {kHalfSd * re, kHalfSd * im};
}

ComplexSpectrum Rng::complex_normal(std::size_t frames, std::size_t bins) {
  ComplexSpectrum z(frames, bins);
  for (auto& v : z.values()) v = complex_normal();
  return z;
}

Rng Rng::split(std::uint64_t index) const { return Rng(seed_, mix_seed(stream_, index)); }

}  // namespace vpidm
