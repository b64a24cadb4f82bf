#ifndef URGENCY_TREE_HPP_
#define URGENCY_TREE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "urgency/featurize.hpp"

namespace urgency {

// Internal nodes route x[feature] <= threshold to the left child. Leaves
// hold weighted class counts (forest) or a single raw leaf weight (boosting).
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> value;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int max_depth = -1;           // -1: unlimited

  std::size_t leaf_for_row(const SparseFeatureMatrix& x, std::size_t row) const;
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

// Class probabilities per row, columns ordered like the model's class values.
struct ClassPrediction {
  std::vector<double> classes;              // predicted class value per row
  std::vector<std::vector<double>> proba;   // n_rows x n_classes
};

struct ForestConfig {
  int n_trees = 100;
  std::uint64_t seed = 42;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<double> class_values;  // sorted distinct training labels
  std::size_t n_features = 0;
  std::string feature_subsample = "sqrt";
  std::uint64_t seed = 42;

  std::size_t n_classes() const { return class_values.size(); }
};

// Multiplicity of each training row in the bootstrap sample of one tree.
std::vector<std::uint32_t> forest_bootstrap_counts(std::size_t n_rows, std::uint64_t seed,
                                                   std::size_t tree_index);

// Features examined per split: floor(sqrt(n_features)), at least 1.
std::size_t forest_max_features(std::size_t n_features);

ForestModel fit_forest(const SparseFeatureMatrix& x, std::span<const double> y,
                       const ForestConfig& config = {});
ClassPrediction predict_forest(const ForestModel& model, const SparseFeatureMatrix& x);

struct BoostingConfig {
  int n_rounds = 100;
  double learning_rate = 0.3;
  int max_depth = 6;
  double l2_lambda = 1.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 42;
};

struct BoostedModel {
  std::vector<std::vector<DecisionTree>> stages;  // [class][round]
  std::vector<double> class_values;
  std::size_t n_features = 0;
  double learning_rate = 0.3;
  double base_score = 0.5;  // initial per-class probability; margin logit(0.5) = 0
  int n_rounds = 0;
  int max_depth = 6;
  double l2_lambda = 1.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 42;
  // Mean one-vs-rest logistic loss over classes after each round.
  std::vector<double> train_log;

  std::size_t n_classes() const { return class_values.size(); }
};

BoostedModel fit_boosted(const SparseFeatureMatrix& x, std::span<const double> y,
                         const BoostingConfig& config = {});
// Per-class additive scores (margins), n_rows x n_classes.
std::vector<std::vector<double>> boosted_margins(const BoostedModel& model,
                                                 const SparseFeatureMatrix& x);
ClassPrediction predict_boosted(const BoostedModel& model, const SparseFeatureMatrix& x);

}  // namespace urgency

#endif  // URGENCY_TREE_HPP_
