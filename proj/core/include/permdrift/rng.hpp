#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>

namespace permdrift {

/// 64-bit FNV-1a. Registry digests and stage-name hashing both use it, so an
/// independent implementation can reproduce every digest from the bytes alone.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  void update(std::string_view bytes) noexcept;
  void update_u64(std::uint64_t value) noexcept;  // little-endian bytes
  void update_double(double value) noexcept;      // IEEE-754 bit pattern
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kOffset;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream derivation: x = mix64(seed ^ fnv1a64(stage)), then for every key
/// x = mix64(x ^ (key * 0x9e3779b97f4a7c15)). Used for every per-year,
/// per-tree and per-pair stream so results never depend on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage,
                          std::initializer_list<std::int64_t> keys = {}) noexcept;

/// SplitMix64: 64-bit state, portable, trivially splittable via derive_seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound); bound must be > 0. Unbiased (Lemire).
  std::uint64_t below(std::uint64_t bound) noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace permdrift
