// SPDX-License-Identifier: Apache-2.0
#include "fillmass/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include <nlohmann/json.hpp>

#include "fillmass/errors.hpp"

namespace fillmass::forest {

using json = nlohmann::json;

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, int n_classes, int n_features)
    : nodes_(std::move(nodes)), n_classes_(n_classes), n_features_(n_features) {
  if (nodes_.empty()) throw ValidationError("tree has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) {
      if (static_cast<int>(n.class_counts.size()) != n_classes_ ||
          std::accumulate(n.class_counts.begin(), n.class_counts.end(), 0) < 1) {
        throw ValidationError("leaf needs per-class counts summing to at least one");
      }
    } else {
      // Children are always stored after their parent, which rules out cycles.
      const auto size = static_cast<int>(nodes_.size());
      if (n.feature >= n_features_ || n.left <= static_cast<int>(i) ||
          n.right <= static_cast<int>(i) || n.left >= size || n.right >= size) {
        throw ValidationError("malformed internal tree node");
      }
    }
  }
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[x[node->feature] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

std::vector<double> DecisionTree::predict_proba(std::span<const double> x) const {
  const auto& leaf = leaf_for(x);
  const double total = std::accumulate(leaf.class_counts.begin(), leaf.class_counts.end(), 0.0);
  std::vector<double> p(n_classes_);
  for (int c = 0; c < n_classes_; ++c) p[c] = leaf.class_counts[c] / total;
  return p;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return best;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0;
  double impurity = 0;  // weighted child impurity sum: n_L*gini_L + n_R*gini_R
};

double weighted_gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double sq = 0;
  for (int c : counts) sq += static_cast<double>(c) * c;
  return total - sq / total;
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
              const TreeConfig& cfg, Rng& rng)
      : X_(X), y_(y), n_classes_(n_classes), cfg_(cfg), rng_(rng) {}

  std::vector<TreeNode> build(std::vector<int> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<int> rows, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::vector<int> counts(n_classes_, 0);
    for (int r : rows) ++counts[y_[r]];
    const bool pure = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) <= 1;
    if (pure || static_cast<int>(rows.size()) < std::max(2, cfg_.min_samples_split) ||
        depth >= cfg_.max_depth) {
      nodes_[index].class_counts = std::move(counts);
      return index;
    }
    const auto split = best_split(rows);
    if (!split) {
      nodes_[index].class_counts = std::move(counts);
      return index;
    }
    std::vector<int> left, right;
    for (int r : rows) (X_(r, split->feature) <= split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    nodes_[index].feature = split->feature;
    nodes_[index].threshold = split->threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    nodes_[index].left = l;
    nodes_[index].right = r;
    return index;
  }

  /// Visits features in a fresh random order and scores the first
  /// `subset` non-constant ones; the winner is the lowest impurity, ties
  /// going to the lower feature index and then the lower threshold.
  std::optional<Split> best_split(const std::vector<int>& rows) {
    const int d = static_cast<int>(X_.cols());
    const int subset = cfg_.feature_subset_size <= 0 ? d : std::min(cfg_.feature_subset_size, d);
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    for (int i = d - 1; i > 0; --i) {
      std::swap(order[i], order[rng_.below(static_cast<std::uint64_t>(i) + 1)]);
    }
    std::vector<Split> candidates;
    int visited = 0;
    for (int f : order) {
      if (visited >= subset) break;
      if (auto s = best_threshold(rows, f)) {
        candidates.push_back(*s);
        ++visited;
      }
    }
    if (candidates.empty()) return std::nullopt;
    std::sort(candidates.begin(), candidates.end(),
              [](const Split& a, const Split& b) { return a.feature < b.feature; });
    Split best = candidates.front();
    for (const auto& c : candidates) {
      if (c.impurity < best.impurity - 1e-12) best = c;
    }
    return best;
  }

  std::optional<Split> best_threshold(const std::vector<int>& rows, int f) {
    std::vector<std::pair<double, int>> vals;
    vals.reserve(rows.size());
    for (int r : rows) vals.emplace_back(X_(r, f), y_[r]);
    std::sort(vals.begin(), vals.end());
    if (vals.front().first == vals.back().first) return std::nullopt;

    const int n = static_cast<int>(vals.size());
    std::vector<int> left(n_classes_, 0), right(n_classes_, 0);
    for (const auto& v : vals) ++right[v.second];
    std::optional<Split> best;
    for (int i = 0; i + 1 < n; ++i) {
      --right[vals[i].second];
      ++left[vals[i].second];
      if (vals[i].first == vals[i + 1].first) continue;
      const double imp = weighted_gini(left, i + 1) + weighted_gini(right, n - i - 1);
      if (!best || imp < best->impurity - 1e-12) {
        double mid = 0.5 * (vals[i].first + vals[i + 1].first);
        if (!(mid < vals[i + 1].first)) mid = vals[i].first;
        best = Split{f, mid, imp};
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  std::span<const int> y_;
  int n_classes_;
  TreeConfig cfg_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

void check_training_inputs(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes) {
  if (X.cols() == 0) throw DomainError("training data has no features");
  if (X.rows() == 0) throw DomainError("training data has no rows");
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) {
    throw DomainError("label count does not match row count");
  }
  if (n_classes < 1) throw DomainError("need at least one class");
  for (int label : y) {
    if (label < 0 || label >= n_classes) throw DomainError("label outside [0, n_classes)");
  }
  if (!X.allFinite()) throw DomainError("training data contains non-finite values");
}

}  // namespace

DecisionTree train_tree(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                        std::span<const int> rows, const TreeConfig& cfg, Rng& rng) {
  check_training_inputs(X, y, n_classes);
  if (rows.empty()) throw DomainError("no rows selected for tree training");
  TreeBuilder builder(X, y, n_classes, cfg, rng);
  return DecisionTree(builder.build({rows.begin(), rows.end()}), n_classes,
                      static_cast<int>(X.cols()));
}

DecisionTree train_tree(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                        const TreeConfig& cfg, Rng& rng) {
  std::vector<int> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return train_tree(X, y, n_classes, rows, cfg, rng);
}

RandomForestModel::RandomForestModel(std::vector<DecisionTree> trees, int n_classes,
                                     int n_features, std::uint64_t seed)
    : trees_(std::move(trees)), n_classes_(n_classes), n_features_(n_features), seed_(seed) {
  if (trees_.empty()) throw ValidationError("forest needs at least one tree");
  for (const auto& t : trees_) {
    if (t.n_features() != n_features_ || t.n_classes() != n_classes_) {
      throw ValidationError("tree shape inconsistent with forest");
    }
  }
}

std::vector<double> RandomForestModel::predict_proba(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_features_) {
    throw DomainError("feature vector has " + std::to_string(x.size()) + " dims, model expects " +
                      std::to_string(n_features_));
  }
  std::vector<double> p(n_classes_, 0.0);
  for (const auto& t : trees_) {
    const auto tp = t.predict_proba(x);
    for (int c = 0; c < n_classes_; ++c) p[c] += tp[c];
  }
  for (double& v : p) v /= static_cast<double>(trees_.size());
  return p;
}

int RandomForestModel::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

RandomForestModel RandomForestModel::prefix(std::size_t count) const {
  if (count < 1 || count > trees_.size()) throw DomainError("bad forest prefix size");
  return RandomForestModel({trees_.begin(), trees_.begin() + static_cast<std::ptrdiff_t>(count)},
                           n_classes_, n_features_, seed_);
}

RandomForestModel train_forest(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                               int n_trees, std::uint64_t seed, const ForestConfig& cfg) {
  if (n_trees < 1) throw DomainError("n_trees must be at least 1");
  check_training_inputs(X, y, n_classes);
  const int d = static_cast<int>(X.cols());
  TreeConfig tcfg;
  tcfg.max_depth = cfg.max_depth;
  tcfg.min_samples_split = cfg.min_samples_split;
  tcfg.feature_subset_size = cfg.feature_subset_size > 0
                                 ? cfg.feature_subset_size
                                 : std::max(1, static_cast<int>(std::lround(std::sqrt(d))));
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<DecisionTree> trees;
  trees.reserve(n_trees);
  for (int i = 0; i < n_trees; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    std::vector<int> rows(n);
    if (cfg.bootstrap) {
      for (auto& r : rows) r = static_cast<int>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    trees.push_back(train_tree(X, y, n_classes, rows, tcfg, rng));
  }
  return RandomForestModel(std::move(trees), n_classes, d, seed);
}

double accuracy(const RandomForestModel& model, const Eigen::MatrixXd& X, std::span<const int> y) {
  if (X.rows() == 0) throw DomainError("accuracy over an empty set");
  int correct = 0;
  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) row[j] = X(i, j);
    correct += model.predict(row) == y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(X.rows());
}

TuningResult tune_n_trees(const Eigen::MatrixXd& X_train, std::span<const int> y_train,
                          const Eigen::MatrixXd& X_val, std::span<const int> y_val, int n_classes,
                          const std::vector<int>& grid, std::uint64_t seed,
                          const ForestConfig& cfg) {
  if (grid.empty()) throw DomainError("tree-count grid is empty");
  if (X_val.rows() == 0 || y_val.empty()) throw DomainError("validation set is empty");
  for (int g : grid) {
    if (g < 1) throw DomainError("tree counts must be positive");
  }
  // Tree i only depends on (seed, i), so a forest of k trees trained with
  // this seed is exactly the first k trees of the largest one.
  const int largest = *std::max_element(grid.begin(), grid.end());
  const auto full = train_forest(X_train, y_train, n_classes, largest, seed, cfg);
  TuningResult result;
  result.grid = grid;
  double best = -1;
  for (int g : grid) {
    const double acc = accuracy(full.prefix(static_cast<std::size_t>(g)), X_val, y_val);
    result.val_accuracy.push_back(acc);
    if (acc > best || (acc == best && g < result.chosen)) {
      best = acc;
      result.chosen = g;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string serialize(const RandomForestModel& model) {
  json doc;
  doc["format"] = "fillmass.random_forest";
  doc["version"] = 1;
  doc["n_classes"] = model.n_classes();
  doc["n_features"] = model.n_features();
  doc["seed"] = model.seed();
  json trees = json::array();
  for (const auto& t : model.trees()) {
    json feature = json::array(), threshold = json::array(), left = json::array(),
         right = json::array(), counts = json::array();
    for (const auto& n : t.nodes()) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      counts.push_back(n.is_leaf() ? json(n.class_counts) : json(nullptr));
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"class_counts", counts}});
  }
  doc["trees"] = trees;
  return doc.dump();
}

RandomForestModel deserialize_forest(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "fillmass.random_forest") throw FormatError("not a forest document");
    if (doc.at("version").get<int>() != 1) throw UnsupportedError("unknown forest version");
    const int n_classes = doc.at("n_classes").get<int>();
    const int n_features = doc.at("n_features").get<int>();
    std::vector<DecisionTree> trees;
    for (const auto& t : doc.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto& counts = t.at("class_counts");
      const std::size_t m = feature.size();
      if (threshold.size() != m || left.size() != m || right.size() != m || counts.size() != m) {
        throw FormatError("tree arrays have mismatched lengths");
      }
      std::vector<TreeNode> nodes(m);
      for (std::size_t i = 0; i < m; ++i) {
        nodes[i].feature = feature[i];
        nodes[i].threshold = threshold[i];
        nodes[i].left = left[i];
        nodes[i].right = right[i];
        if (!counts[i].is_null()) nodes[i].class_counts = counts[i].get<std::vector<int>>();
      }
      trees.emplace_back(std::move(nodes), n_classes, n_features);
    }
    return RandomForestModel(std::move(trees), n_classes, n_features,
                             doc.at("seed").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed forest document: ") + e.what());
  }
}

}  // namespace fillmass::forest
