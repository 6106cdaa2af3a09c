#include "permdrift/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "permdrift/error.hpp"
#include "permdrift/parallel.hpp"
#include "permdrift/rng.hpp"

namespace permdrift {

Label DecisionTree::predict(std::span<const std::uint8_t> bits) const noexcept {
  std::int32_t at = 0;
  while (!nodes_[at].leaf()) {
    const auto& n = nodes_[at];
    at = bits[static_cast<std::size_t>(n.feature)] ? n.right : n.left;
  }
  return nodes_[at].label;
}

double Forest::score(std::span<const std::uint8_t> bits) const noexcept {
  if (trees_.empty()) return 0.0;
  std::size_t votes = 0;
  for (const auto& t : trees_) votes += t.predict(bits) == Label::Malware ? 1 : 0;
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

namespace {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;   // row-major
  std::vector<std::uint8_t> label;  // 1 = malware

  std::uint8_t at(std::size_t r, std::size_t c) const noexcept { return bits[r * cols + c]; }
};

Matrix pack(const Dataset& d) {
  Matrix x;
  x.rows = d.size();
  x.cols = d.feature_count();
  x.bits.resize(x.rows * x.cols);
  x.label.resize(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto& s = d[i];
    if (s.bits.size() != x.cols) {
      throw Error(ErrorCode::LengthMismatch, "sample " + s.id + " has wrong bit length",
                  static_cast<std::int64_t>(i));
    }
    std::copy(s.bits.begin(), s.bits.end(), x.bits.begin() + static_cast<std::ptrdiff_t>(i * x.cols));
    x.label[i] = s.label == Label::Malware ? 1 : 0;
  }
  return x;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const ForestParams& params, std::uint64_t seed)
      : x_(x), params_(params), rng_(seed), features_(x.cols) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    per_split_ = params.features_per_split == FeaturesPerSplit::All
                     ? x.cols
                     : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols))));
  }

  DecisionTree build() {
    std::vector<std::size_t> sample(x_.rows);
    for (auto& s : sample) s = static_cast<std::size_t>(rng_.below(x_.rows));
    grow(sample, 0, sample.size(), 0);
    return DecisionTree(std::move(nodes_));
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    const std::size_t n = hi - lo;
    std::size_t pos = 0;
    for (std::size_t i = lo; i < hi; ++i) pos += x_.label[idx[i]];
    nodes_[id].label = 2 * pos >= n ? Label::Malware : Label::Benign;

    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
    const bool pure = pos == 0 || pos == n;
    const bool depth_capped = params_.max_depth && depth >= *params_.max_depth;
    if (pure || depth_capped || n < 2 * min_leaf) return id;

    // Lazily shuffled feature order; constant columns do not count toward
    // the per-split budget.
    std::size_t visited = 0;
    int best_feature = -1;
    double best_purity = -1.0;
    for (std::size_t k = 0; k < features_.size() && visited < per_split_; ++k) {
      const auto j = k + static_cast<std::size_t>(rng_.below(features_.size() - k));
      std::swap(features_[k], features_[j]);
      const std::size_t f = features_[k];
      std::size_t ones = 0, ones_pos = 0;
      for (std::size_t i = lo; i < hi; ++i) {
        const auto r = idx[i];
        if (x_.at(r, f)) {
          ++ones;
          ones_pos += x_.label[r];
        }
      }
      if (ones == 0 || ones == n) continue;
      ++visited;
      const std::size_t zeros = n - ones;
      if (ones < min_leaf || zeros < min_leaf) continue;
      const std::size_t zeros_pos = pos - ones_pos;
      auto purity = [](std::size_t p, std::size_t total) {
        const double a = static_cast<double>(p);
        const double b = static_cast<double>(total - p);
        return (a * a + b * b) / static_cast<double>(total);
      };
      // maximizing this minimizes the weighted child Gini impurity
      const double score = purity(ones_pos, ones) + purity(zeros_pos, zeros);
      if (score > best_purity) {
        best_purity = score;
        best_feature = static_cast<int>(f);
      }
    }
    if (best_feature < 0) return id;

    const auto f = static_cast<std::size_t>(best_feature);
    const auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                       idx.begin() + static_cast<std::ptrdiff_t>(hi),
                                       [&](std::size_t r) { return x_.at(r, f) == 0; });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
    nodes_[id].feature = best_feature;
    const auto left = grow(idx, lo, mid, depth + 1);
    nodes_[id].left = left;
    const auto right = grow(idx, mid, hi, depth + 1);
    nodes_[id].right = right;
    return id;
  }

  const Matrix& x_;
  const ForestParams& params_;
  Rng rng_;
  std::vector<std::size_t> features_;
  std::size_t per_split_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Forest grow_forest(const Dataset& train, const ForestParams& params, int threads) {
  if (params.n_trees < 1 || params.min_leaf < 1 || (params.max_depth && *params.max_depth < 0)) {
    throw Error(ErrorCode::BadConfig, "invalid forest parameters");
  }
  if (train.empty()) throw Error(ErrorCode::TooFewSamples, "empty training set");
  if (train.feature_count() == 0) throw Error(ErrorCode::EmptyFeatureSet, "no features to split on");
  if (!train.class_counts().both()) throw Error(ErrorCode::MissingClass, "training set lacks a class");

  const Matrix x = pack(train);
  std::vector<DecisionTree> trees(static_cast<std::size_t>(params.n_trees));
  parallel_for(trees.size(), threads, [&](std::size_t t) {
    TreeBuilder builder(x, params, derive_seed(params.seed, "tree", {static_cast<std::int64_t>(t)}));
    trees[t] = builder.build();
  });
  return Forest(params, x.cols, std::move(trees));
}

}  // namespace permdrift
