#include "permdrift/rng.hpp"

#include <bit>
#include <cstring>

namespace permdrift {

void Fnv1a64::update(std::string_view bytes) noexcept {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= kPrime;
  }
}

void Fnv1a64::update_u64(std::uint64_t value) noexcept {
  for (int i = 0; i < 8; ++i) {
    state_ ^= (value >> (8 * i)) & 0xffU;
    state_ *= kPrime;
  }
}

void Fnv1a64::update_double(double value) noexcept {
  update_u64(std::bit_cast<std::uint64_t>(value));
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage,
                          std::initializer_list<std::int64_t> keys) noexcept {
  std::uint64_t x = mix64(seed ^ fnv1a64(stage));
  for (std::int64_t key : keys) {
    x = mix64(x ^ (static_cast<std::uint64_t>(key) * 0x9e3779b97f4a7c15ULL));
  }
  return x;
}

__extension__ using u128 = unsigned __int128;

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  u128 m = static_cast<u128>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace permdrift
