#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>

namespace cbo {

/// FNV-1a hash of a label string.  Used to derive independent random streams
/// for different purposes ("initial_design", "acq_candidates", ...) from one
/// user-facing seed, so that adding a consumer of randomness in one part of
/// the pipeline does not perturb the draws seen by another.
constexpr std::uint64_t fnv1a_64(std::string_view s) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ULL;
  }
  return h;
}

/// SplitMix64 mixer.  Used both to expand a seed into xoshiro state and to
/// derive per-replication child seeds.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Derives a child seed from a base seed and an index (e.g. a replication
/// number).  Children of distinct indices are decorrelated by construction.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  SplitMix64 mix(base ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  (void)mix.next();
  return mix.next();
}

/// xoshiro256++ pseudo-random generator with purpose-labelled streams.
///
/// A stream is identified by (seed, label): the 256-bit state is expanded by
/// SplitMix64 from `seed ^ fnv1a_64(label)`.  Streams with different labels
/// are independent for practical purposes even under the same seed.  Output
/// sequences are reproducible bit-for-bit on a given platform and build.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view label) noexcept {
    SplitMix64 mix(seed ^ fnv1a_64(label));
    for (auto& word : state_) word = mix.next();
  }

  /// Next raw 64-bit output (xoshiro256++ scrambler).
  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_open() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n), n >= 1.  Unbiased (rejection sampling).
  std::uint64_t uniform_below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0ULL - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// One standard normal draw (Box-Muller; second value of each pair is
  /// cached, so draws come in deterministic pairs).
  double normal() noexcept {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    auto [a, b] = normal_pair();
    cached_ = b;
    have_cached_ = true;
    return a;
  }

  /// One pair of independent standard normal draws (Box-Muller, trigonometric
  /// form).  Does not interact with the cache used by normal().
  std::pair<double, double> normal_pair() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace cbo
