#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "permdrift/dataset.hpp"

namespace permdrift {

enum class FeaturesPerSplit : std::uint8_t { Sqrt, All };

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;  // unlimited when absent
  int min_leaf = 1;
  FeaturesPerSplit features_per_split = FeaturesPerSplit::Sqrt;
  std::uint64_t seed = 42;

  bool operator==(const ForestParams&) const = default;
};

/// Binary split on a {0,1} column at threshold 0.5: bit 0 goes to `left`.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::int32_t left = -1;
  std::int32_t right = -1;
  Label label = Label::Benign;

  bool leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  Label predict(std::span<const std::uint8_t> bits) const noexcept;
  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;  // preorder; nodes_[0] is the root
};

class Forest {
 public:
  Forest() = default;
  Forest(ForestParams params, std::size_t feature_count, std::vector<DecisionTree> trees)
      : params_(params), feature_count_(feature_count), trees_(std::move(trees)) {}

  const ForestParams& params() const noexcept { return params_; }
  std::size_t feature_count() const noexcept { return feature_count_; }
  std::span<const DecisionTree> trees() const noexcept { return trees_; }

  /// Fraction of trees voting Malware.
  double score(std::span<const std::uint8_t> bits) const noexcept;
  bool operator==(const Forest&) const = default;

 private:
  ForestParams params_;
  std::size_t feature_count_ = 0;
  std::vector<DecisionTree> trees_;
};

/// CART trees on bootstrap resamples with Gini splits. Tree t draws from the
/// stream derive_seed(seed, "tree", {t}), so the result does not depend on
/// `threads`. Throws MissingClass, EmptyFeatureSet, TooFewSamples.
Forest grow_forest(const Dataset& train, const ForestParams& params, int threads = 1);

}  // namespace permdrift
