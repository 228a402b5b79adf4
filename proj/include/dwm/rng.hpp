#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dwm/linalg.hpp"

namespace dwm {

/// Independent random streams used by one replicate of the closed loop.
enum class StreamTag : std::uint64_t {
  plant = 1,
  controller = 2,
  attacker = 3,
  auxiliary = 4,
};

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream(root_seed, replicate, tag). Streams with different
/// (replicate, tag) are decorrelated through three SplitMix64 rounds, so
/// replicates can be generated in any order or in parallel.
std::uint64_t stream_seed(std::uint64_t root_seed, std::uint64_t replicate,
                          StreamTag tag);

/// Deterministic generator: a 64-bit Mersenne Twister (std::mt19937_64,
/// whose output sequence is fixed by the standard) with library-owned
/// conversions to uniforms and categorical draws so results do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t root_seed, std::uint64_t replicate, StreamTag tag)
      : engine_(stream_seed(root_seed, replicate, tag)) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Draw an index from a probability vector by inversion.
  int categorical(std::span<const double> probs);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Per-row inverse-CDF tables over the nonzero entries of a row-stochastic
/// matrix. Sampling cost is linear in the row's support, not its width.
class RowSampler {
 public:
  RowSampler() = default;
  explicit RowSampler(const Matrix& rows);

  int sample(int row, double u) const;
  int rows() const { return static_cast<int>(offsets_.size()) - 1; }

 private:
  std::vector<int> offsets_;
  std::vector<int> columns_;
  std::vector<double> cumulative_;
};

}  // namespace dwm
