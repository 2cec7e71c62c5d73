#pragma once

#include <cstdint>

namespace saekit::linalg {

/// SplitMix64 (Steele, Lea & Flood 2014). The state is a single 64-bit
/// counter advanced by the golden-ratio increment and passed through a fixed
/// mixing function, so a seed fully determines the stream on every platform.
///
/// Derived draws:
///   uniform()      (next() >> 11) · 2⁻⁵³, in [0, 1)
///   below(n)       rejection-sampled, unbiased integer in [0, n)
///   normal()       Box–Muller on two uniforms, both outputs consumed in turn
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next() noexcept;
  double uniform() noexcept;
  std::uint64_t below(std::uint64_t n) noexcept;
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  /// Independent child stream, for splitting one seed across subsystems.
  Rng fork(std::uint64_t stream_id) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace saekit::linalg
