#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>

namespace gaussfit {

/// Keyed counter-based generator over the SplitMix64 sequence.
///
/// Output k of stream s is fmix64(gamma * (offset(seed) + s * 2^40 + k)).
/// Both maps are bijections on 64-bit words, so streams with different ids
/// read disjoint stretches of one sequence as long as each draws fewer than
/// 2^40 values. Satisfies UniformRandomBitGenerator.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kStreamBits = 40;
  static constexpr std::uint64_t kMaxStreams = std::uint64_t{1} << (64 - kStreamBits);

  StreamRng(std::uint64_t seed, std::uint64_t stream) : offset_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {
    if (stream >= kMaxStreams) throw std::out_of_range("stream id exceeds 2^24");
    base_ = stream << kStreamBits;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t index = offset_ + base_ + counter_++;
    return mix(index * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t draws() const { return counter_; }

  /// Deterministic child seed for an independent sub-computation.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    return mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ (tag * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL));
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t offset_;
  std::uint64_t base_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace gaussfit
