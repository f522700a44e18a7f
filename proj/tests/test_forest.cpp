#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "risklab/forest.hpp"

using namespace risklab;

namespace {

FeatureMatrix matrix(std::size_t features, const std::vector<std::pair<std::vector<double>, bool>>& rows) {
  FeatureMatrix m(features);
  for (const auto& [values, label] : rows) m.add_row(values, label);
  return m;
}

// Eight rows over two features. With both features scored at every node,
// depth <= 2 and no bootstrap, the tree is
//   x0 <= 1.5 : 6 rows (4-, 2+)
//     x1 <= 0.5 : 2 rows (2-)
//     x1 >  0.5 : 4 rows (2-, 2+)
//   x0 >  1.5 : 2 rows (2+)
// Root gain      H(4,4) - 6/8 H(4,2)            = 1.5 - 0.75 log2 3
// Left gain      6/8 (H(4,2) - 4/6 H(2,2))      = 0.75 log2 3 - 1     (weighted)
// Total 0.5, so normalized x0 = 3 - 1.5 log2 3, x1 = 1.5 log2 3 - 2.
FeatureMatrix hand_instance() {
  return matrix(2, {{{0, 0}, false},
                    {{0, 1}, false},
                    {{1, 0}, false},
                    {{1, 1}, true},
                    {{2, 0}, true},
                    {{2, 1}, true},
                    {{0, 2}, true},
                    {{1, 2}, false}});
}

ForestParams single_tree() {
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  p.max_depth = 2;
  p.features_per_split = 2;
  return p;
}

}  // namespace

TEST_CASE("entropy in bits") {
  CHECK(entropy(0, 0) == 0.0);
  CHECK(entropy(5, 0) == 0.0);
  CHECK(entropy(3, 3) == doctest::Approx(1.0));
  CHECK(entropy(4, 2) == doctest::Approx(std::log2(3.0) - 2.0 / 3.0));
}

TEST_CASE("params validation") {
  ForestParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.n_trees == 100);
  CHECK(p.min_samples_split == 2);
  CHECK(p.bootstrap);
  CHECK(p.resolved_features(10) == 4);
  CHECK(p.resolved_features(16) == 4);
  CHECK(p.resolved_features(1) == 1);
  p.n_trees = 0;
  CHECK_THROWS_AS(p.validate(), ForestError);
  p = {};
  p.min_samples_split = 1;
  CHECK_THROWS_AS(p.validate(), ForestError);
  p = {};
  p.max_depth = 0;
  CHECK_THROWS_AS(p.validate(), ForestError);
  p = {};
  p.features_per_split = 0;
  CHECK_THROWS_AS(p.validate(), ForestError);
}

TEST_CASE("training needs both classes") {
  auto only_pos = matrix(1, {{{1}, true}, {{2}, true}});
  CHECK_THROWS_AS(ForestModel::train(only_pos, {}, 1), ForestError);
  FeatureMatrix m(2);
  const std::vector<double> narrow{1.0};
  CHECK_THROWS_AS(m.add_row(narrow, true), ForestError);
}

TEST_CASE("hand-enumerated single tree") {
  const ForestModel model = ForestModel::train(hand_instance(), single_tree(), 99);
  REQUIRE(model.trees().size() == 1);
  const DecisionTree& tree = model.trees()[0];
  CHECK(tree.split_count() == 2);

  const auto& root = tree.nodes()[0];
  CHECK(root.feature == 0);
  CHECK(root.threshold == 1.5);
  CHECK(root.negatives == 4);
  CHECK(root.positives == 4);

  const double log3 = std::log2(3.0);
  CHECK(tree.raw_importance()[0] == doctest::Approx(1.5 - 0.75 * log3).epsilon(1e-12));
  CHECK(tree.raw_importance()[1] == doctest::Approx(0.75 * log3 - 1.0).epsilon(1e-12));

  const auto imp = model.feature_importances();
  CHECK(imp[0] == doctest::Approx(3.0 - 1.5 * log3).epsilon(1e-12));
  CHECK(imp[1] == doctest::Approx(1.5 * log3 - 2.0).epsilon(1e-12));

  const std::vector<double> a{0, 0}, b{0, 1}, c{2, 2};
  CHECK(model.predict_probability(a) == 0.0);
  CHECK(model.predict_probability(b) == 0.5);
  CHECK(model.predict_probability(c) == 1.0);

  // The same tree for any seed: both features are scored at every node.
  for (std::uint64_t seed : {1u, 2u, 3u, 12345u}) {
    const auto other = ForestModel::train(hand_instance(), single_tree(), seed).feature_importances();
    CHECK(other == imp);
  }
}

TEST_CASE("separable data is fit exactly and the informative word ranks first") {
  // feature 0 plays "quake": count >= 1 exactly on positives
  std::mt19937 rng(3);
  FeatureMatrix m(5);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 40; ++i) {
    const bool pos = i % 2 == 0;
    std::vector<double> row(5);
    row[0] = pos ? 1 + rng() % 3 : 0;
    for (std::size_t j = 1; j < 5; ++j) row[j] = static_cast<double>(rng() % 3);
    m.add_row(row, pos);
    rows.push_back(row);
  }
  for (std::uint64_t seed : {0u, 7u, 42u}) {
    ForestParams p;
    p.n_trees = 25;
    const auto model = ForestModel::train(m, p, seed);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) correct += model.predict(rows[i]) == m.positive(i) ? 1 : 0;
    CHECK(correct == rows.size());
    const auto imp = model.feature_importances();
    CHECK(std::max_element(imp.begin(), imp.end()) - imp.begin() == 0);
    CHECK(std::accumulate(imp.begin(), imp.end(), 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("single deep tree without bootstrap fits any consistent labeling") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureMatrix m(3);
    std::map<std::vector<double>, bool> seen;
    std::vector<std::vector<double>> rows;
    while (rows.size() < 30) {
      std::vector<double> row{double(rng() % 4), double(rng() % 4), double(rng() % 4)};
      if (seen.contains(row)) continue;
      seen[row] = rng() % 2 == 0;
      rows.push_back(row);
    }
    seen[rows[0]] = true;
    seen[rows[1]] = false;
    for (const auto& r : rows) m.add_row(r, seen[r]);
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    const auto model = ForestModel::train(m, p, static_cast<std::uint64_t>(trial));
    for (const auto& r : rows) CHECK(model.predict_probability(r) == (seen[r] ? 1.0 : 0.0));
  }
}

TEST_CASE("identical bags in both classes vote one half") {
  const auto m = matrix(2, {{{1, 0}, true}, {{0, 1}, true}, {{1, 0}, false}, {{0, 1}, false}});
  SUBCASE("no bootstrap: every tree splits to leaves holding one copy of each class") {
    ForestParams p;
    p.n_trees = 2;
    p.bootstrap = false;
    const auto model = ForestModel::train(m, p, 5);
    for (const auto& tree : model.trees()) {
      for (const auto& node : tree.nodes()) {
        if (node.is_leaf()) {
          CHECK(node.positives == 1);
          CHECK(node.negatives == 1);
        }
      }
    }
    for (std::size_t r = 0; r < m.rows(); ++r) CHECK(model.predict_probability(m.row(r)) == 0.5);
  }
  SUBCASE("bootstrap: forest probability is the mean of the two tree votes") {
    ForestParams p;
    p.n_trees = 2;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      ForestModel model;
      try {
        model = ForestModel::train(m, p, seed);
      } catch (const ForestError&) {
        continue;
      }
      for (std::size_t r = 0; r < m.rows(); ++r) {
        double votes = 0.0;
        for (const auto& tree : model.trees()) {
          std::size_t node = 0;
          while (!tree.nodes()[node].is_leaf()) {
            const auto& n = tree.nodes()[node];
            node = static_cast<std::size_t>(m.value(r, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left
                                                                                                             : n.right);
          }
          const auto& leaf = tree.nodes()[node];
          REQUIRE(leaf.samples() > 0);
          votes += static_cast<double>(leaf.positives) / static_cast<double>(leaf.samples());
        }
        CHECK(model.predict_probability(m.row(r)) == votes / 2.0);
      }
    }
  }
}

TEST_CASE("training is deterministic for a seed") {
  std::mt19937 rng(23);
  FeatureMatrix m(12);
  for (int i = 0; i < 60; ++i) {
    std::vector<double> row(12);
    for (auto& v : row) v = static_cast<double>(rng() % 3);
    m.add_row(row, (row[0] + row[3] + rng() % 2) > 2);
  }
  ForestParams p;
  p.n_trees = 30;
  const auto a = ForestModel::train(m, p, 777);
  const auto b = ForestModel::train(m, p, 777);
  CHECK(a.feature_importances() == b.feature_importances());
  for (std::size_t r = 0; r < m.rows(); ++r) CHECK(a.predict_probability(m.row(r)) == b.predict_probability(m.row(r)));
  CHECK(a.trees().size() == 30);
}

TEST_CASE("max depth and min samples limit growth") {
  const auto m = hand_instance();
  ForestParams p = single_tree();
  p.max_depth = 1;
  auto model = ForestModel::train(m, p, 1);
  CHECK(model.trees()[0].split_count() == 1);
  p.max_depth.reset();
  p.min_samples_split = 9;
  model = ForestModel::train(m, p, 1);
  CHECK(model.trees()[0].split_count() == 0);
  const auto imp = model.feature_importances();
  CHECK(imp == std::vector<double>{0.0, 0.0});
}
