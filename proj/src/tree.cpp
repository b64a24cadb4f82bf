#include "urgency/tree.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "urgency/error.hpp"
#include "urgency/random.hpp"

namespace urgency {

namespace {

constexpr double kNoSplit = -std::numeric_limits<double>::infinity();
// Minimum loss reduction for a boosting split.
constexpr double kMinBoostGain = 1e-6;

struct Entry {
  std::uint32_t feature;
  std::uint32_t row;
  double value;
};

// Nonzero entries ordered by (feature, value, row). Children inherit this
// order through stable partitioning, so no per-node sorting is needed.
std::vector<Entry> sorted_entries(const SparseFeatureMatrix& x) {
  std::vector<Entry> entries;
  entries.reserve(x.nnz());
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    const auto cols = x.row_cols(r);
    const auto vals = x.row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      entries.push_back({cols[i], static_cast<std::uint32_t>(r), vals[i]});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.feature != b.feature) return a.feature < b.feature;
    if (a.value != b.value) return a.value < b.value;
    return a.row < b.row;
  });
  return entries;
}

struct Segment {
  std::uint32_t feature;
  std::size_t begin;
  std::size_t end;
};

struct Split {
  double score = kNoSplit;
  std::int32_t feature = -1;
  double threshold = 0.0;
};

class GiniPolicy {
 public:
  GiniPolicy(std::span<const int> cls, std::span<const double> weight, std::size_t n_classes)
      : cls_(cls), weight_(weight), totals_(n_classes), acc_(n_classes) {}

  void set_node(std::span<const std::uint32_t> rows) {
    std::fill(totals_.begin(), totals_.end(), 0.0);
    total_weight_ = 0.0;
    for (auto r : rows) {
      totals_[cls_[r]] += weight_[r];
      total_weight_ += weight_[r];
    }
    total_sq_ = 0.0;
    for (double t : totals_) total_sq_ += t * t;
  }

  bool splittable() const {
    return std::count_if(totals_.begin(), totals_.end(), [](double t) { return t > 0; }) > 1;
  }

  void clear() {
    std::fill(acc_.begin(), acc_.end(), 0.0);
    acc_weight_ = 0.0;
    acc_sq_ = 0.0;
    rest_sq_ = total_sq_;
  }

  void add(std::uint32_t row) {
    const int c = cls_[row];
    const double w = weight_[row];
    const double a = acc_[c];
    const double b = totals_[c] - a;
    acc_sq_ += (a + w) * (a + w) - a * a;
    rest_sq_ += (b - w) * (b - w) - b * b;
    acc_[c] = a + w;
    acc_weight_ += w;
  }

  // Proxy for the weighted Gini decrease: sum_k L_k^2 / W_L + sum_k R_k^2 / W_R.
  double score() const {
    const double rest_weight = total_weight_ - acc_weight_;
    if (acc_weight_ <= 0.0 || rest_weight <= 0.0) return kNoSplit;
    return acc_sq_ / acc_weight_ + rest_sq_ / rest_weight;
  }

  std::vector<double> leaf_value() const { return totals_; }

 private:
  std::span<const int> cls_;
  std::span<const double> weight_;
  std::vector<double> totals_;
  std::vector<double> acc_;
  double total_weight_ = 0.0;
  double total_sq_ = 0.0;
  double acc_weight_ = 0.0;
  double acc_sq_ = 0.0;
  double rest_sq_ = 0.0;
};

class BoostPolicy {
 public:
  BoostPolicy(std::span<const double> grad, std::span<const double> hess, double lambda,
              double min_child_weight)
      : grad_(grad), hess_(hess), lambda_(lambda), min_child_weight_(min_child_weight) {}

  void set_node(std::span<const std::uint32_t> rows) {
    g_ = h_ = 0.0;
    for (auto r : rows) {
      g_ += grad_[r];
      h_ += hess_[r];
    }
    count_ = rows.size();
    parent_term_ = g_ * g_ / (h_ + lambda_);
  }

  bool splittable() const { return true; }

  void clear() {
    acc_g_ = acc_h_ = 0.0;
    acc_count_ = 0;
  }

  void add(std::uint32_t row) {
    acc_g_ += grad_[row];
    acc_h_ += hess_[row];
    ++acc_count_;
  }

  double score() const {
    if (acc_count_ == 0 || acc_count_ == count_) return kNoSplit;
    const double rest_g = g_ - acc_g_;
    const double rest_h = h_ - acc_h_;
    if (acc_h_ < min_child_weight_ || rest_h < min_child_weight_) return kNoSplit;
    return acc_g_ * acc_g_ / (acc_h_ + lambda_) + rest_g * rest_g / (rest_h + lambda_) -
           parent_term_;
  }

  std::vector<double> leaf_value() const { return {-g_ / (h_ + lambda_)}; }

 private:
  std::span<const double> grad_;
  std::span<const double> hess_;
  double lambda_;
  double min_child_weight_;
  double g_ = 0.0;
  double h_ = 0.0;
  std::size_t count_ = 0;
  double parent_term_ = 0.0;
  double acc_g_ = 0.0;
  double acc_h_ = 0.0;
  std::size_t acc_count_ = 0;
};

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return (mid >= hi) ? lo : mid;
}

// Evaluates every boundary between distinct values of one feature within a
// node. Zero-valued rows are implicit and sit between the negative and
// positive entries.
template <class Policy>
void scan_segment(Policy& policy, std::span<const Entry> seg, Split& best) {
  const auto feature = static_cast<std::int32_t>(seg.front().feature);
  auto consider = [&](double score, double threshold) {
    if (score > best.score) best = Split{score, feature, threshold};
  };
  const std::size_t first_pos = static_cast<std::size_t>(
      std::partition_point(seg.begin(), seg.end(), [](const Entry& e) { return e.value < 0; }) -
      seg.begin());

  policy.clear();
  for (std::size_t i = 0; i < first_pos; ++i) {
    if (i > 0 && seg[i].value != seg[i - 1].value) {
      consider(policy.score(), midpoint(seg[i - 1].value, seg[i].value));
    }
    policy.add(seg[i].row);
  }
  if (first_pos > 0) consider(policy.score(), midpoint(seg[first_pos - 1].value, 0.0));

  policy.clear();
  for (std::size_t i = seg.size(); i-- > first_pos;) {
    if (i + 1 < seg.size() && seg[i].value != seg[i + 1].value) {
      consider(policy.score(), midpoint(seg[i].value, seg[i + 1].value));
    }
    policy.add(seg[i].row);
  }
  if (first_pos < seg.size()) consider(policy.score(), midpoint(0.0, seg[first_pos].value));
}

struct NodeWork {
  std::size_t tree_node;
  std::size_t row_begin, row_end;
  std::size_t entry_begin, entry_end;
  int depth;
};

// Grows one tree breadth-first. `choose` maps the node's non-constant
// feature segments to the subset that is searched.
template <class Policy, class Chooser>
DecisionTree grow_tree(Policy& policy, std::vector<std::uint32_t> rows,
                       std::vector<Entry> entries, std::size_t n_total_rows, int max_depth,
                       double min_score, Chooser&& choose) {
  DecisionTree tree;
  tree.max_depth = max_depth;
  tree.nodes.emplace_back();
  std::vector<std::uint8_t> go_left(n_total_rows, 0);
  std::vector<Segment> segments;

  std::deque<NodeWork> queue;
  queue.push_back({0, 0, rows.size(), 0, entries.size(), 0});
  while (!queue.empty()) {
    const NodeWork work = queue.front();
    queue.pop_front();
    const std::span<std::uint32_t> node_rows(rows.data() + work.row_begin,
                                             work.row_end - work.row_begin);
    const std::span<Entry> node_entries(entries.data() + work.entry_begin,
                                        work.entry_end - work.entry_begin);
    policy.set_node(node_rows);
    tree.nodes[work.tree_node].value = policy.leaf_value();

    const bool depth_ok = max_depth < 0 || work.depth < max_depth;
    if (!depth_ok || node_rows.size() < 2 || !policy.splittable()) continue;

    // Non-constant features: some rows are zero and some not, or at least
    // two distinct nonzero values.
    segments.clear();
    for (std::size_t i = 0; i < node_entries.size();) {
      std::size_t j = i;
      while (j < node_entries.size() && node_entries[j].feature == node_entries[i].feature) ++j;
      const bool has_zero = (j - i) < node_rows.size();
      const bool varied = node_entries[i].value != node_entries[j - 1].value;
      if (has_zero || varied) segments.push_back({node_entries[i].feature, i, j});
      i = j;
    }
    if (segments.empty()) continue;

    Split best;
    for (const Segment& s : choose(std::span<const Segment>(segments))) {
      scan_segment(policy, std::span<const Entry>(node_entries.data() + s.begin, s.end - s.begin),
                   best);
    }
    if (!(best.score > min_score) || best.feature < 0) continue;

    // Route rows: zeros follow (0 <= threshold), nonzeros their own value.
    const std::uint8_t zero_left = best.threshold >= 0.0 ? 1 : 0;
    for (auto r : node_rows) go_left[r] = zero_left;
    for (const Entry& e : node_entries) {
      if (e.feature == static_cast<std::uint32_t>(best.feature)) {
        go_left[e.row] = e.value <= best.threshold ? 1 : 0;
      }
    }
    const auto row_mid = std::stable_partition(node_rows.begin(), node_rows.end(),
                                               [&](std::uint32_t r) { return go_left[r] != 0; });
    const auto entry_mid = std::stable_partition(
        node_entries.begin(), node_entries.end(),
        [&](const Entry& e) { return go_left[e.row] != 0; });
    const std::size_t n_left_rows = static_cast<std::size_t>(row_mid - node_rows.begin());
    const std::size_t n_left_entries = static_cast<std::size_t>(entry_mid - node_entries.begin());
    if (n_left_rows == 0 || n_left_rows == node_rows.size()) {
      throw NumericError("tree split produced an empty child");
    }

    const std::size_t left = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[work.tree_node];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = static_cast<std::int32_t>(left);
    node.right = static_cast<std::int32_t>(left + 1);
    queue.push_back({left, work.row_begin, work.row_begin + n_left_rows, work.entry_begin,
                     work.entry_begin + n_left_entries, work.depth + 1});
    queue.push_back({left + 1, work.row_begin + n_left_rows, work.row_end,
                     work.entry_begin + n_left_entries, work.entry_end, work.depth + 1});
  }
  // Internal nodes keep their statistics only in leaves.
  for (auto& n : tree.nodes) {
    if (!n.is_leaf()) n.value.clear();
  }
  return tree;
}

double feature_value(const SparseFeatureMatrix& x, std::size_t row, std::uint32_t feature) {
  const auto cols = x.row_cols(row);
  const auto it = std::lower_bound(cols.begin(), cols.end(), feature);
  if (it == cols.end() || *it != feature) return 0.0;
  return x.row_values(row)[static_cast<std::size_t>(it - cols.begin())];
}

struct EncodedLabels {
  std::vector<double> class_values;
  std::vector<int> index;
};

EncodedLabels encode_labels(std::span<const double> y) {
  EncodedLabels enc;
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("non-finite class label");
  }
  enc.class_values.assign(y.begin(), y.end());
  std::sort(enc.class_values.begin(), enc.class_values.end());
  enc.class_values.erase(std::unique(enc.class_values.begin(), enc.class_values.end()),
                         enc.class_values.end());
  enc.index.reserve(y.size());
  for (double v : y) {
    enc.index.push_back(static_cast<int>(
        std::lower_bound(enc.class_values.begin(), enc.class_values.end(), v) -
        enc.class_values.begin()));
  }
  return enc;
}

void check_training_shape(const SparseFeatureMatrix& x, std::span<const double> y,
                          const char* learner) {
  if (x.n_rows() != y.size()) throw DataError("feature rows and labels differ in count");
  if (x.n_rows() < 2) {
    throw DataError(std::string(learner) + " needs at least 2 training rows");
  }
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::size_t DecisionTree::leaf_for_row(const SparseFeatureMatrix& x, std::size_t row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    const double v = feature_value(x, row, static_cast<std::uint32_t>(n.feature));
    i = static_cast<std::size_t>(v <= n.threshold ? n.left : n.right);
  }
  return i;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::vector<std::uint32_t> forest_bootstrap_counts(std::size_t n_rows, std::uint64_t seed,
                                                   std::size_t tree_index) {
  Rng rng(derive_seed(seed, 2 * tree_index));
  std::vector<std::uint32_t> counts(n_rows, 0);
  for (std::size_t i = 0; i < n_rows; ++i) ++counts[rng.below(n_rows)];
  return counts;
}

std::size_t forest_max_features(std::size_t n_features) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))));
}

ForestModel fit_forest(const SparseFeatureMatrix& x, std::span<const double> y,
                       const ForestConfig& config) {
  check_training_shape(x, y, "random forest");
  if (config.n_trees < 1) throw ConfigError("random forest needs at least one tree");
  const EncodedLabels labels = encode_labels(y);
  if (labels.class_values.size() == 1) {
    spdlog::warn("random forest trained on a single class; it always predicts {}",
                 labels.class_values.front());
  }

  ForestModel model;
  model.class_values = labels.class_values;
  model.n_features = x.n_cols();
  model.seed = config.seed;
  const std::size_t n = x.n_rows();
  const std::size_t d = x.n_cols();
  const std::size_t max_features = forest_max_features(d);
  const std::vector<Entry> all_entries = sorted_entries(x);

  for (int t = 0; t < config.n_trees; ++t) {
    const auto tree_index = static_cast<std::size_t>(t);
    const auto counts = forest_bootstrap_counts(n, config.seed, tree_index);
    std::vector<double> weights(counts.begin(), counts.end());
    std::vector<std::uint32_t> rows;
    for (std::size_t r = 0; r < n; ++r) {
      if (counts[r] > 0) rows.push_back(static_cast<std::uint32_t>(r));
    }
    std::vector<Entry> entries;
    entries.reserve(all_entries.size());
    for (const Entry& e : all_entries) {
      if (counts[e.row] > 0) entries.push_back(e);
    }

    Rng rng(derive_seed(config.seed, 2 * tree_index + 1));
    std::vector<Segment> chosen;
    // Drawing max_features features uniformly without replacement and keeping
    // the non-constant ones (or, if none, continuing to the first
    // non-constant draw) selects a uniform subset of the non-constant
    // features whose size is hypergeometric.
    auto choose = [&](std::span<const Segment> nonconstant) -> std::span<const Segment> {
      std::size_t successes_left = nonconstant.size();
      std::size_t population_left = d;
      std::size_t k = 0;
      for (std::size_t draw = 0; draw < max_features && population_left > 0; ++draw) {
        if (rng.uniform() * static_cast<double>(population_left) <
            static_cast<double>(successes_left)) {
          ++k;
          --successes_left;
        }
        --population_left;
      }
      k = std::max<std::size_t>(k, 1);
      chosen.assign(nonconstant.begin(), nonconstant.end());
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(chosen[i], chosen[i + rng.below(chosen.size() - i)]);
      }
      return std::span<const Segment>(chosen.data(), k);
    };

    GiniPolicy policy(labels.index, weights, labels.class_values.size());
    model.trees.push_back(grow_tree(policy, std::move(rows), std::move(entries), n, -1, kNoSplit,
                                    choose));
  }
  return model;
}

ClassPrediction predict_forest(const ForestModel& model, const SparseFeatureMatrix& x) {
  if (x.n_cols() != model.n_features) {
    throw DataError("random forest expects " + std::to_string(model.n_features) +
                    " features, got " + std::to_string(x.n_cols()));
  }
  const std::size_t k = model.n_classes();
  ClassPrediction out;
  out.proba.assign(x.n_rows(), std::vector<double>(k, 0.0));
  out.classes.resize(x.n_rows());
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    auto& p = out.proba[r];
    for (const auto& tree : model.trees) {
      const auto& counts = tree.nodes[tree.leaf_for_row(x, r)].value;
      double total = 0.0;
      for (double c : counts) total += c;
      for (std::size_t c = 0; c < k; ++c) p[c] += counts[c] / total;
    }
    for (double& v : p) v /= static_cast<double>(model.trees.size());
    out.classes[r] = model.class_values[argmax_lowest(p)];
  }
  return out;
}

BoostedModel fit_boosted(const SparseFeatureMatrix& x, std::span<const double> y,
                         const BoostingConfig& config) {
  check_training_shape(x, y, "gradient boosting");
  if (config.n_rounds < 0 || config.max_depth < 1 || config.l2_lambda < 0 ||
      !(config.learning_rate >= 0.0 && config.learning_rate <= 1.0)) {
    throw ConfigError("invalid gradient boosting hyperparameters");
  }
  const EncodedLabels labels = encode_labels(y);
  if (labels.class_values.size() == 1) {
    spdlog::warn("gradient boosting trained on a single class; it always predicts {}",
                 labels.class_values.front());
  }
  const std::size_t n = x.n_rows();
  const std::size_t k = labels.class_values.size();

  BoostedModel model;
  model.class_values = labels.class_values;
  model.n_features = x.n_cols();
  model.learning_rate = config.learning_rate;
  model.n_rounds = config.n_rounds;
  model.max_depth = config.max_depth;
  model.l2_lambda = config.l2_lambda;
  model.min_child_weight = config.min_child_weight;
  model.seed = config.seed;
  model.stages.assign(k, {});

  const std::vector<Entry> all_entries = sorted_entries(x);
  std::vector<std::uint32_t> all_rows(n);
  for (std::size_t r = 0; r < n; ++r) all_rows[r] = static_cast<std::uint32_t>(r);

  const double base_margin = std::log(model.base_score / (1.0 - model.base_score));
  std::vector<std::vector<double>> margin(k, std::vector<double>(n, base_margin));
  std::vector<double> grad(n), hess(n);
  auto choose_all = [](std::span<const Segment> s) { return s; };

  for (int round = 0; round < config.n_rounds; ++round) {
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t r = 0; r < n; ++r) {
        const double p = sigmoid(margin[c][r]);
        const double target = labels.index[r] == static_cast<int>(c) ? 1.0 : 0.0;
        grad[r] = p - target;
        hess[r] = std::max(p * (1.0 - p), 1e-16);
      }
      BoostPolicy policy(grad, hess, config.l2_lambda, config.min_child_weight);
      DecisionTree tree =
          grow_tree(policy, all_rows, all_entries, n, config.max_depth, kMinBoostGain, choose_all);
      for (std::size_t r = 0; r < n; ++r) {
        margin[c][r] += config.learning_rate * tree.nodes[tree.leaf_for_row(x, r)].value[0];
      }
      model.stages[c].push_back(std::move(tree));
    }
    double loss = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t r = 0; r < n; ++r) {
        const bool positive = labels.index[r] == static_cast<int>(c);
        loss += softplus(positive ? -margin[c][r] : margin[c][r]);
      }
    }
    loss /= static_cast<double>(n * k);
    if (!std::isfinite(loss)) {
      throw NumericError("gradient boosting loss is not finite at round " + std::to_string(round));
    }
    model.train_log.push_back(loss);
  }
  return model;
}

std::vector<std::vector<double>> boosted_margins(const BoostedModel& model,
                                                 const SparseFeatureMatrix& x) {
  if (x.n_cols() != model.n_features) {
    throw DataError("gradient boosting model expects " + std::to_string(model.n_features) +
                    " features, got " + std::to_string(x.n_cols()));
  }
  const double base_margin = std::log(model.base_score / (1.0 - model.base_score));
  std::vector<std::vector<double>> out(x.n_rows(),
                                       std::vector<double>(model.n_classes(), base_margin));
  for (std::size_t c = 0; c < model.n_classes(); ++c) {
    for (const auto& tree : model.stages[c]) {
      for (std::size_t r = 0; r < x.n_rows(); ++r) {
        out[r][c] += model.learning_rate * tree.nodes[tree.leaf_for_row(x, r)].value[0];
      }
    }
  }
  return out;
}

ClassPrediction predict_boosted(const BoostedModel& model, const SparseFeatureMatrix& x) {
  const auto margins = boosted_margins(model, x);
  ClassPrediction out;
  out.classes.resize(x.n_rows());
  out.proba.resize(x.n_rows());
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    const auto& m = margins[r];
    const double top = *std::max_element(m.begin(), m.end());
    std::vector<double> p(m.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < m.size(); ++c) {
      p[c] = std::exp(m[c] - top);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
    out.classes[r] = model.class_values[argmax_lowest(p)];
    out.proba[r] = std::move(p);
  }
  return out;
}

}  // namespace urgency
