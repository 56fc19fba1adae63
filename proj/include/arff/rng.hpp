#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

namespace arff {

/// Counter-based 64-bit generator.
///
/// Output n of a stream with key k is mix64(k + n * golden), i.e. SplitMix64
/// evaluated at an explicit counter. Streams are derived by hashing a tag into
/// the key (`split`), so independent purposes (batch selection, proposal
/// steps, acceptance draws, resampling) and independent realizations each own
/// a stream and never share state. A stream can also be addressed directly by
/// counter (`at`), which makes per-iteration substreams free to construct.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t seed = 0) noexcept : key_(mix64(seed ^ kSeedSalt)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return mix64(key_ + (++counter_) * kGolden); }

  /// Value at an absolute counter position; does not advance the stream.
  constexpr result_type at(std::uint64_t counter) const noexcept { return mix64(key_ + counter * kGolden); }

  /// Independent child stream identified by `tag`.
  constexpr CounterRng split(std::uint64_t tag) const noexcept {
    CounterRng child;
    child.key_ = mix64(key_ ^ mix64(tag + kSplitSalt));
    return child;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x243f6a8885a308d3ULL;
  static constexpr std::uint64_t kSplitSalt = 0x13198a2e03707344ULL;

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Stream tags used by the training loop.
enum class StreamPurpose : std::uint64_t {
  kBatch = 1,
  kProposal = 2,
  kAcceptance = 3,
  kResampling = 4,
  kData = 5,
  kTestData = 6,
  kInitialFrequencies = 7,
  kModel = 8,
  kShuffle = 9,
};

inline CounterRng stream(const CounterRng& parent, StreamPurpose purpose) {
  return parent.split(static_cast<std::uint64_t>(purpose));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(CounterRng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection (no modulo bias). n must be > 0.
inline std::uint64_t uniform_index(CounterRng& rng, std::uint64_t n) noexcept {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

/// Fills `out` with i.i.d. standard normals (Box-Muller on pairs). The number
/// of generator calls depends only on out.size(), never on the values drawn.
inline void fill_standard_normal(CounterRng& rng, std::span<double> out) noexcept {
  std::size_t i = 0;
  while (i < out.size()) {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i++] = radius * std::cos(angle);
    if (i < out.size()) out[i++] = radius * std::sin(angle);
  }
}

inline double standard_normal(CounterRng& rng) noexcept {
  double v;
  fill_standard_normal(rng, std::span<double>(&v, 1));
  return v;
}

}  // namespace arff
