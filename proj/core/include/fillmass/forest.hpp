// SPDX-License-Identifier: Apache-2.0
//
// CART decision trees (Gini impurity) bagged into a random forest.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fillmass/random.hpp"

namespace fillmass::forest {

/// Internal node when feature >= 0, leaf otherwise.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;  ///< samples with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  std::vector<int> class_counts;  ///< leaves only

  bool is_leaf() const { return feature < 0; }
};

struct TreeConfig {
  int max_depth = 25;
  int min_samples_split = 2;
  /// Features examined per node; 0 means all of them.
  int feature_subset_size = 0;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, int n_classes, int n_features);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int n_classes() const { return n_classes_; }
  int n_features() const { return n_features_; }

  /// Normalized class counts of the leaf reached by x.
  std::vector<double> predict_proba(std::span<const double> x) const;
  const TreeNode& leaf_for(std::span<const double> x) const;

  int depth() const;

 private:
  std::vector<TreeNode> nodes_;
  int n_classes_ = 0;
  int n_features_ = 0;
};

/// Grows one tree on the rows listed in `rows` (duplicates allowed, as in a
/// bootstrap). Throws DomainError on empty input, d = 0 or bad labels.
DecisionTree train_tree(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                        std::span<const int> rows, const TreeConfig& cfg, Rng& rng);

/// Convenience overload over every row.
DecisionTree train_tree(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                        const TreeConfig& cfg, Rng& rng);

struct ForestConfig {
  int max_depth = 25;
  int min_samples_split = 2;
  bool bootstrap = true;
  /// Per-node feature subset; 0 selects round(sqrt(d)).
  int feature_subset_size = 0;
};

class RandomForestModel {
 public:
  RandomForestModel() = default;
  RandomForestModel(std::vector<DecisionTree> trees, int n_classes, int n_features,
                    std::uint64_t seed);

  const std::vector<DecisionTree>& trees() const { return trees_; }
  int n_classes() const { return n_classes_; }
  int n_features() const { return n_features_; }
  std::uint64_t seed() const { return seed_; }

  /// Mean over trees of leaf distributions. DomainError on dimension mismatch.
  std::vector<double> predict_proba(std::span<const double> x) const;
  int predict(std::span<const double> x) const;

  /// Model built from the first `count` trees.
  RandomForestModel prefix(std::size_t count) const;

 private:
  std::vector<DecisionTree> trees_;
  int n_classes_ = 0;
  int n_features_ = 0;
  std::uint64_t seed_ = 0;
};

/// Tree i draws from an RNG stream derived from (seed, i), so the model is a
/// pure function of (data, n_trees, seed, cfg).
RandomForestModel train_forest(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                               int n_trees, std::uint64_t seed, const ForestConfig& cfg = {});

double accuracy(const RandomForestModel& model, const Eigen::MatrixXd& X, std::span<const int> y);

struct TuningResult {
  std::vector<int> grid;
  std::vector<double> val_accuracy;
  int chosen = 0;
};

inline const std::vector<int> kDefaultTreeGrid = {10, 50, 100, 200, 500};

/// Picks the tree count with the highest validation accuracy (ties -> fewest trees).
TuningResult tune_n_trees(const Eigen::MatrixXd& X_train, std::span<const int> y_train,
                          const Eigen::MatrixXd& X_val, std::span<const int> y_val,
                          int n_classes, const std::vector<int>& grid, std::uint64_t seed,
                          const ForestConfig& cfg = {});

std::string serialize(const RandomForestModel& model);
RandomForestModel deserialize_forest(const std::string& text);

}  // namespace fillmass::forest
