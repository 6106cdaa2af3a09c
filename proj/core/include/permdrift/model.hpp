#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "permdrift/dataset.hpp"
#include "permdrift/forest.hpp"
#include "permdrift/mlp.hpp"

namespace permdrift {

enum class ModelKind : std::uint8_t { Forest, Mlp };

std::string_view to_string(ModelKind kind) noexcept;

using ModelParams = std::variant<ForestParams, MlpParams>;

ModelKind kind_of(const ModelParams& params) noexcept;
std::uint64_t seed_of(const ModelParams& params) noexcept;
ModelParams with_seed(ModelParams params, std::uint64_t seed);

class TrainedModel {
 public:
  TrainedModel(Forest forest, std::uint64_t fingerprint);
  TrainedModel(MlpNetwork network, MlpParams params, std::uint64_t fingerprint);

  ModelKind kind() const noexcept;
  std::size_t feature_count() const noexcept;
  /// FNV-1a 64 over parameters, training data and learned structure.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  std::string fingerprint_hex() const;

  const Forest* forest() const noexcept { return std::get_if<Forest>(&model_); }
  const MlpNetwork* network() const noexcept { return std::get_if<MlpNetwork>(&model_); }
  const MlpParams& mlp_params() const noexcept { return mlp_params_; }

  double score(std::span<const std::uint8_t> bits) const;

 private:
  std::variant<Forest, MlpNetwork> model_;
  MlpParams mlp_params_;
  std::uint64_t fingerprint_ = 0;
};

TrainedModel train_forest(const Dataset& train, const ForestParams& params, int threads = 1);
TrainedModel train_mlp(const Dataset& train, const MlpParams& params);
TrainedModel train(const Dataset& train, const ModelParams& params, int threads = 1);

struct Predictions {
  std::vector<Label> labels;  // Malware iff score >= 0.5
  std::vector<double> scores;
};

/// Throws LengthMismatch when the samples' width differs from the model's.
Predictions predict(const TrainedModel& model, const Dataset& samples);

/// JSON document: {"format","version","kind","feature_count","fingerprint",
/// "params", and "trees" (nodes as [feature,left,right,label]) or "weights"
/// ({"w1" input-major nested rows, "b1", "w2", "b2"})}.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(std::string_view text);

}  // namespace permdrift
