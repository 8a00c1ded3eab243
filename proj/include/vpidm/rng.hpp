#pragma once

#include <cstdint>
#include <random>

#include "vpidm/types.hpp"

namespace vpidm {

/// Where a batch of Gaussian draws came from: enough to regenerate it.
struct DrawProvenance {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t offset = 0;  ///< complex draws consumed from the stream before this batch
};

/// Seeded random source. Each (seed, stream) pair yields an independent,
/// reproducible sequence; `split` derives child streams so that parallel work
/// can be made independent of the thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t complex_draws() const { return complex_draws_; }

  /// Uniform in [0, 1).
  double uniform();
  double normal();
  /// Circular-symmetric complex normal: real and imaginary parts are each
  /// N(0, 1/2), so E|z|^2 = 1.
  Complex complex_normal();
  /// Fills a frames x bins spectrum with i.i.d. complex_normal() values.
  ComplexSpectrum complex_normal(std::size_t frames, std::size_t bins);
  DrawProvenance provenance() const { return {seed_, stream_, complex_draws_}; }

  std::uint64_t next_u64() { return engine_(); }

  /// Independent generator for child stream `index` of this generator's seed.
  Rng split(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t complex_draws_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// SplitMix64 finalizer; used to derive per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace vpidm
