#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "permdrift/dataset.hpp"

namespace permdrift {

/// Single hidden ReLU layer, one sigmoid output, binary cross-entropy loss,
/// trained with Adam.
struct MlpParams {
  int hidden_units = 128;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 15;
  int batch_size = 15;
  double validation_fraction = 0.10;
  bool early_stop = true;
  int patience = 0;  // epochs without improvement tolerated before stopping
  double dropout_rate = 0.0;
  std::uint64_t seed = 42;

  bool operator==(const MlpParams&) const = default;
};

class MlpNetwork {
 public:
  MlpNetwork() = default;
  MlpNetwork(std::size_t inputs, std::size_t hidden);

  /// Glorot-uniform weights, zero biases.
  static MlpNetwork initialize(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t hidden() const noexcept { return hidden_; }

  /// Flat layout: w1 (inputs x hidden, input-major), b1 (hidden), w2 (hidden), b2.
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  double& w1(std::size_t input, std::size_t unit) { return params_[input * hidden_ + unit]; }
  double& b1(std::size_t unit) { return params_[inputs_ * hidden_ + unit]; }
  double& w2(std::size_t unit) { return params_[inputs_ * hidden_ + hidden_ + unit]; }
  double& b2() { return params_.back(); }

  double logit(std::span<const double> x) const;
  double probability(std::span<const double> x) const;
  double probability(std::span<const std::uint8_t> bits) const;

  /// Mean binary cross-entropy over a row-major batch and its gradient with
  /// respect to parameters(). `dropout_scale`, when non-empty, multiplies each
  /// hidden activation (batch x hidden, 0 or 1/(1-rate)).
  double loss_and_gradient(std::span<const double> batch, std::span<const double> targets,
                           std::span<double> gradient,
                           std::span<const double> dropout_scale = {}) const;

  bool operator==(const MlpNetwork&) const = default;

 private:
  std::size_t inputs_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

/// Validation rows are the tail of a seeded shuffle. With early_stop the
/// weights from the epoch of minimum validation loss are restored.
/// Throws MissingClass, EmptyFeatureSet, NonFiniteLoss.
MlpNetwork fit_mlp(const Dataset& train, const MlpParams& params);

}  // namespace permdrift
