#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "permdrift/dataset.hpp"

namespace permdrift {

/// Malware is the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  /// Benign as the positive class.
  ConfusionMatrix swapped() const noexcept { return {tn, fn, fp, tp}; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted);

enum class Metric : std::uint8_t {
  Accuracy,
  PrecisionBenign,
  RecallBenign,
  F1Benign,
  PrecisionMalware,
  RecallMalware,
  F1Malware,
};

/// JSON / CSV key, e.g. "f1_malware".
std::string_view to_string(Metric m) noexcept;
/// Accepts the key names plus the short forms "accuracy", "f1", "f1_malware".
Metric parse_metric(std::string_view text);

struct Scores {
  double precision_benign = 0;
  double recall_benign = 0;
  double f1_benign = 0;
  double precision_malware = 0;
  double recall_malware = 0;
  double f1_malware = 0;
  double accuracy = 0;
  /// Bit (1 << Metric) is set when that value came from a 0/0 and was
  /// reported as 0.0.
  std::uint8_t undefined = 0;

  double get(Metric m) const noexcept;
  bool is_undefined(Metric m) const noexcept {
    return (undefined >> static_cast<unsigned>(m)) & 1U;
  }
  bool operator==(const Scores&) const = default;
};

/// Total: 0/0 cells evaluate to 0.0 and are flagged. Throws Empty when the
/// matrix has no samples.
Scores scores(const ConfusionMatrix& cm);

}  // namespace permdrift
