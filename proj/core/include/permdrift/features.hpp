#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "permdrift/dataset.hpp"

namespace permdrift {

enum class ExclusionFlag : std::uint8_t { Deprecated = 1, Restricted = 2, NotThirdParty = 4 };

/// Set of permission categories to drop; empty means all permissions.
class ExclusionSpec {
 public:
  constexpr ExclusionSpec() = default;
  constexpr ExclusionSpec(std::initializer_list<ExclusionFlag> flags) {
    for (auto f : flags) bits_ |= static_cast<std::uint8_t>(f);
  }

  constexpr bool contains(ExclusionFlag f) const noexcept {
    return (bits_ & static_cast<std::uint8_t>(f)) != 0;
  }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr bool subset_of(ExclusionSpec other) const noexcept {
    return (bits_ & ~other.bits_) == 0;
  }
  constexpr std::uint8_t bits() const noexcept { return bits_; }
  constexpr auto operator<=>(const ExclusionSpec&) const = default;

  /// "All", or the flag letters in D, R, N order (e.g. "DR").
  std::string label() const;
  /// Comma-separated subset of d, r, n (case-insensitive); "" or "all" is empty.
  static ExclusionSpec parse(std::string_view text);

 private:
  std::uint8_t bits_ = 0;
};

struct FeatureMask {
  std::vector<bool> keep;
  std::size_t kept_count = 0;

  static FeatureMask all(std::size_t n) { return {std::vector<bool>(n, true), n}; }
  std::vector<std::size_t> kept_columns() const;
};

FeatureMask build_mask(const PermissionRegistry& registry, ExclusionSpec spec);

/// Column projection; labels, years, ids and order are untouched.
Dataset apply_mask(const Dataset& dataset, const FeatureMask& mask);
PermissionRegistry apply_mask(const PermissionRegistry& registry, const FeatureMask& mask);

}  // namespace permdrift
