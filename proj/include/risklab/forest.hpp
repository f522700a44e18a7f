#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace risklab {

class ForestError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;           // unlimited when empty
  int min_samples_split = 2;
  std::optional<int> features_per_split;  // ceil(sqrt(m)) when empty
  bool bootstrap = true;

  void validate() const;
  int resolved_features(std::size_t n_features) const;
};

// Row-major matrix of non-negative feature values with a binary label per row.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(std::size_t n_features) : n_features_(n_features) {}

  void add_row(std::span<const double> values, bool positive);

  std::size_t rows() const { return labels_.size(); }
  std::size_t features() const { return n_features_; }
  double value(std::size_t row, std::size_t feature) const { return values_[row * n_features_ + feature]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * n_features_, n_features_}; }
  bool positive(std::size_t row) const { return labels_[row] != 0; }
  std::size_t positives() const;

 private:
  std::size_t n_features_;
  std::vector<double> values_;
  std::vector<unsigned char> labels_;
};

struct TreeNode {
  static constexpr int kLeaf = -1;

  int feature = kLeaf;
  double threshold = 0.0;  // rows with value <= threshold go left
  int left = -1;
  int right = -1;
  int depth = 0;
  std::size_t negatives = 0;
  std::size_t positives = 0;

  bool is_leaf() const { return feature == kLeaf; }
  std::size_t samples() const { return negatives + positives; }
  double positive_fraction() const {
    return samples() == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(samples());
  }
};

// Binary classification tree grown greedily on entropy (information gain).
class DecisionTree {
 public:
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& leaf_for(std::span<const double> row) const;
  double probability(std::span<const double> row) const { return leaf_for(row).positive_fraction(); }

  // Entropy decrease per feature, each split weighted by the fraction of the
  // tree's training samples that reach it. Not normalized.
  const std::vector<double>& raw_importance() const { return importance_; }
  std::size_t split_count() const;

 private:
  friend class TreeBuilder;
  std::vector<TreeNode> nodes_;
  std::vector<double> importance_;
};

class ForestModel {
 public:
  // Throws ForestError unless the matrix holds at least one row of each class.
  static ForestModel train(const FeatureMatrix& data, const ForestParams& params, std::uint64_t seed);

  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t features() const { return n_features_; }

  // Mean of per-tree leaf positive fractions.
  double predict_probability(std::span<const double> row) const;
  bool predict(std::span<const double> row) const { return predict_probability(row) > 0.5; }

  // Mean over trees of raw importance, normalized to sum 1. All zeros when
  // no tree ever split.
  std::vector<double> feature_importances() const;

 private:
  std::vector<DecisionTree> trees_;
  ForestParams params_;
  std::uint64_t seed_ = 0;
  std::size_t n_features_ = 0;
};

// Binary entropy in bits of a (negatives, positives) count pair.
double entropy(double negatives, double positives);

}  // namespace risklab
