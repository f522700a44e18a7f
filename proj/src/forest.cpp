#include "risklab/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>

namespace risklab {

void ForestParams::validate() const {
  if (n_trees < 1) throw ForestError("n_trees must be positive");
  if (max_depth && *max_depth < 1) throw ForestError("max_depth must be positive");
  if (min_samples_split < 2) throw ForestError("min_samples_split must be at least 2");
  if (features_per_split && *features_per_split < 1) throw ForestError("features_per_split must be positive");
}

int ForestParams::resolved_features(std::size_t n_features) const {
  if (n_features == 0) return 0;
  if (features_per_split) return std::min<int>(*features_per_split, static_cast<int>(n_features));
  const auto root = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
  return std::clamp(root, 1, static_cast<int>(n_features));
}

void FeatureMatrix::add_row(std::span<const double> values, bool positive) {
  if (values.size() != n_features_) throw ForestError("row width does not match feature count");
  values_.insert(values_.end(), values.begin(), values.end());
  labels_.push_back(positive ? 1 : 0);
}

std::size_t FeatureMatrix::positives() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

double entropy(double negatives, double positives) {
  const double total = negatives + positives;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double count : {negatives, positives}) {
    if (count > 0.0) {
      const double p = count / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    const auto f = static_cast<std::size_t>(node->feature);
    node = &nodes_[static_cast<std::size_t>(row[f] <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

std::size_t DecisionTree::split_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& data, const ForestParams& params, std::mt19937_64& rng)
      : data_(data), params_(params), rng_(rng), features_per_split_(params.resolved_features(data.features())) {
    feature_order_.resize(data.features());
    std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
  }

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.importance_.assign(data_.features(), 0.0);
    root_samples_ = static_cast<double>(samples.size());
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = -1.0;
  };

  int grow(std::vector<std::size_t>& samples, int depth) {
    const auto index = static_cast<int>(tree_.nodes_.size());
    TreeNode node;
    node.depth = depth;
    for (std::size_t s : samples) (data_.positive(s) ? node.positives : node.negatives)++;
    tree_.nodes_.push_back(node);

    const bool pure = node.positives == 0 || node.negatives == 0;
    const bool depth_limited = params_.max_depth && depth >= *params_.max_depth;
    if (pure || depth_limited || samples.size() < static_cast<std::size_t>(params_.min_samples_split)) return index;

    const double parent_entropy = entropy(static_cast<double>(node.negatives), static_cast<double>(node.positives));
    auto split = find_split(samples, parent_entropy);
    if (!split) return index;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t s : samples) (data_.value(s, split->feature) <= split->threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    const double weight = static_cast<double>(node.samples()) / root_samples_;
    tree_.importance_[split->feature] += weight * split->gain;

    const int left_index = grow(left, depth + 1);
    const int right_index = grow(right, depth + 1);
    TreeNode& stored = tree_.nodes_[static_cast<std::size_t>(index)];
    stored.feature = static_cast<int>(split->feature);
    stored.threshold = split->threshold;
    stored.left = left_index;
    stored.right = right_index;
    return index;
  }

  // Draws features in random order until features_per_split non-constant ones
  // have been scored. Zero-gain splits are accepted so impure nodes keep
  // separating while any feature varies.
  std::optional<Split> find_split(const std::vector<std::size_t>& samples, double parent_entropy) {
    std::optional<Split> best;
    int scored = 0;
    const std::size_t m = feature_order_.size();
    std::vector<std::pair<double, bool>> column(samples.size());
    for (std::size_t drawn = 0; drawn < m && scored < features_per_split_; ++drawn) {
      std::uniform_int_distribution<std::size_t> pick(drawn, m - 1);
      std::swap(feature_order_[drawn], feature_order_[pick(rng_)]);
      const std::size_t feature = feature_order_[drawn];

      for (std::size_t i = 0; i < samples.size(); ++i) {
        column[i] = {data_.value(samples[i], feature), data_.positive(samples[i])};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++scored;

      const auto n = static_cast<double>(column.size());
      double total_pos = 0.0;
      for (const auto& [_, pos] : column) total_pos += pos ? 1.0 : 0.0;
      const double total_neg = n - total_pos;
      double left_pos = 0.0;
      double left_neg = 0.0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        (column[i].second ? left_pos : left_neg) += 1.0;
        if (column[i].first == column[i + 1].first) continue;
        const double left_n = left_pos + left_neg;
        const double right_n = n - left_n;
        const double child = (left_n / n) * entropy(left_neg, left_pos) +
                             (right_n / n) * entropy(total_neg - left_neg, total_pos - left_pos);
        const double gain = parent_entropy - child;
        if (!best || gain > best->gain) {
          best = Split{feature, 0.5 * (column[i].first + column[i + 1].first), gain};
        }
      }
    }
    if (best && best->gain < 0.0) best->gain = 0.0;  // rounding noise
    return best;
  }

  const FeatureMatrix& data_;
  const ForestParams& params_;
  std::mt19937_64& rng_;
  int features_per_split_;
  std::vector<std::size_t> feature_order_;
  double root_samples_ = 0.0;
  DecisionTree tree_;
};

ForestModel ForestModel::train(const FeatureMatrix& data, const ForestParams& params, std::uint64_t seed) {
  params.validate();
  const std::size_t pos = data.positives();
  if (pos == 0 || pos == data.rows()) {
    throw ForestError("training needs at least one positive and one negative row");
  }

  ForestModel model;
  model.params_ = params;
  model.seed_ = seed;
  model.n_features_ = data.features();
  model.trees_.reserve(static_cast<std::size_t>(params.n_trees));

  const std::size_t n = data.rows();
  for (int t = 0; t < params.n_trees; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> samples(n);
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (auto& s : samples) s = draw(rng);
      std::sort(samples.begin(), samples.end());
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    TreeBuilder builder(data, params, rng);
    model.trees_.push_back(builder.build(std::move(samples)));
  }
  return model;
}

double ForestModel::predict_probability(std::span<const double> row) const {
  if (row.size() != n_features_) throw ForestError("row width does not match feature count");
  double sum = 0.0;
  for (const DecisionTree& tree : trees_) sum += tree.probability(row);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> ForestModel::feature_importances() const {
  std::vector<double> out(n_features_, 0.0);
  for (const DecisionTree& tree : trees_) {
    const auto& raw = tree.raw_importance();
    for (std::size_t f = 0; f < n_features_; ++f) out[f] += raw[f];
  }
  for (double& v : out) v /= static_cast<double>(trees_.size());
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (total > 0.0) {
    for (double& v : out) v /= total;
  }
  return out;
}

}  // namespace risklab
