#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

#include "permdrift/dataset.hpp"

namespace permdrift {

struct SplitConfig {
  double train_fraction = 0.8;
  bool stratified = true;
  std::uint64_t seed = 42;
};

enum class BalanceMethod : std::uint8_t { None, OversampleMinority, UndersampleMajority };

std::string_view to_string(BalanceMethod m) noexcept;
/// Accepts none|over|under and the long names.
BalanceMethod parse_balance_method(std::string_view text);

struct BalanceConfig {
  BalanceMethod method = BalanceMethod::OversampleMinority;
  std::uint64_t seed = 42;
};

struct SplitResult {
  Dataset train;
  Dataset test;
};

/// Per class (when stratified) the first floor(n_class * fraction) entries of
/// a seeded shuffle go to train; the rest go to test. Both halves keep the
/// input's relative order.
SplitResult split(const Dataset& dataset, const SplitConfig& cfg);

/// Oversampling appends seeded with-replacement draws of minority samples
/// after the original rows; undersampling keeps a seeded subset of the
/// majority class in original order.
Dataset balance(const Dataset& dataset, const BalanceConfig& cfg);

}  // namespace permdrift
