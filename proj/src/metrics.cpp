#include "urgency/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "urgency/error.hpp"

namespace urgency {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DataError(std::string(what) + ": inputs differ in length");
}

void require_both_classes(std::span<const int> labels, const char* what) {
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError(std::string(what) + ": labels must be 0 or 1");
    (l == 1 ? pos : neg) = true;
  }
  if (!pos || !neg) throw DataError(std::string(what) + " is undefined unless both classes occur");
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  require_same_length(pred.size(), truth.size(), "rmse");
  if (pred.empty()) throw DataError("rmse of empty vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> pred, std::span<const double> truth) {
  require_same_length(pred.size(), truth.size(), "spearman_rho");
  if (pred.size() < 2) throw DataError("spearman_rho needs at least 2 items");
  const auto rp = midranks(pred);
  const auto rt = midranks(truth);
  const double n = static_cast<double>(rp.size());
  const double mp = std::accumulate(rp.begin(), rp.end(), 0.0) / n;
  const double mt = std::accumulate(rt.begin(), rt.end(), 0.0) / n;
  double cov = 0.0, vp = 0.0, vt = 0.0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    cov += (rp[i] - mp) * (rt[i] - mt);
    vp += (rp[i] - mp) * (rp[i] - mp);
    vt += (rt[i] - mt) * (rt[i] - mt);
  }
  if (vp == 0.0 || vt == 0.0) {
    throw DataError("spearman_rho is undefined when a vector has a single distinct value");
  }
  return cov / std::sqrt(vp * vt);
}

int binarize(UrgencyLabel label) { return binarize(label.value()); }

int binarize(double label_value) { return label_value > 4.0 ? 1 : 0; }

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require_same_length(scores.size(), labels.size(), "roc_auc");
  require_both_classes(labels, "roc_auc");
  const auto ranks = midranks(scores);
  double pos_rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (labels[i] == 1) {
      pos_rank_sum += ranks[i];
      n_pos += 1.0;
    }
  }
  const double n_neg = static_cast<double>(ranks.size()) - n_pos;
  return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

F1Scores f1_scores(std::span<const int> pred, std::span<const int> truth) {
  require_same_length(pred.size(), truth.size(), "f1_scores");
  if (pred.empty()) throw DataError("f1_scores of empty vectors");
  double conf[2][2] = {{0, 0}, {0, 0}};  // [truth][pred]
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if ((pred[i] != 0 && pred[i] != 1) || (truth[i] != 0 && truth[i] != 1)) {
      throw DataError("f1_scores: labels must be 0 or 1");
    }
    conf[truth[i]][pred[i]] += 1.0;
  }
  auto f1 = [&](int c) {
    const double tp = conf[c][c];
    const double predicted = conf[0][c] + conf[1][c];
    const double actual = conf[c][0] + conf[c][1];
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double recall = actual > 0 ? tp / actual : 0.0;
    return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  };
  F1Scores out;
  out.class0 = f1(0);
  out.class1 = f1(1);
  const double support0 = conf[0][0] + conf[0][1];
  const double support1 = conf[1][0] + conf[1][1];
  out.weighted = (support0 * out.class0 + support1 * out.class1) / (support0 + support1);
  return out;
}

KappaResult weighted_kappa_linear(std::span<const double> rater_a, std::span<const double> rater_b,
                                  std::span<const double> categories) {
  require_same_length(rater_a.size(), rater_b.size(), "weighted kappa");
  if (rater_a.empty()) throw DataError("weighted kappa needs at least one item");
  if (categories.size() < 2) throw DataError("weighted kappa needs at least two categories");
  if (!std::is_sorted(categories.begin(), categories.end()) ||
      std::adjacent_find(categories.begin(), categories.end()) != categories.end()) {
    throw DataError("weighted kappa categories must be strictly increasing");
  }
  const std::size_t k = categories.size();
  auto index_of = [&](double v) {
    const auto it = std::lower_bound(categories.begin(), categories.end(), v);
    if (it == categories.end() || *it != v) {
      throw DataError("rating " + std::to_string(v) + " is not one of the categories");
    }
    return static_cast<std::size_t>(it - categories.begin());
  };
  std::vector<double> observed(k * k, 0.0), row_marg(k, 0.0), col_marg(k, 0.0);
  const double n = static_cast<double>(rater_a.size());
  for (std::size_t i = 0; i < rater_a.size(); ++i) {
    const std::size_t a = index_of(rater_a[i]);
    const std::size_t b = index_of(rater_b[i]);
    observed[a * k + b] += 1.0 / n;
    row_marg[a] += 1.0 / n;
    col_marg[b] += 1.0 / n;
  }
  double obs_dis = 0.0, exp_dis = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double w = std::abs(static_cast<double>(i) - static_cast<double>(j)) /
                       static_cast<double>(k - 1);
      obs_dis += w * observed[i * k + j];
      exp_dis += w * row_marg[i] * col_marg[j];
    }
  }
  KappaResult out;
  out.n_items = rater_a.size();
  out.kappa = exp_dis == 0.0 ? 1.0 : 1.0 - obs_dis / exp_dis;
  return out;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(i * 0.05);
  return grid;
}

BinaryReport binary_report(std::span<const double> scores, std::span<const int> labels,
                           double threshold) {
  const double auc = roc_auc(scores, labels);
  std::vector<int> pred(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= threshold ? 1 : 0;
  const F1Scores f1 = f1_scores(pred, labels);
  return {auc, f1.weighted, f1.class0, f1.class1, threshold};
}

std::vector<BinaryReport> sweep_thresholds(std::span<const double> scores,
                                           std::span<const int> labels,
                                           std::span<const double> grid) {
  std::vector<BinaryReport> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(binary_report(scores, labels, t));
  return out;
}

const BinaryReport& best_by_weighted_f1(std::span<const BinaryReport> sweep) {
  if (sweep.empty()) throw DataError("empty threshold sweep");
  const BinaryReport* best = &sweep[0];
  for (const auto& r : sweep) {
    if (r.f1_weighted > best->f1_weighted) best = &r;
  }
  return *best;
}

CalibrationCurve calibration_curve(std::span<const double> pred, std::span<const double> truth) {
  require_same_length(pred.size(), truth.size(), "calibration_curve");
  std::map<double, std::vector<double>> groups;
  for (std::size_t i = 0; i < pred.size(); ++i) groups[truth[i]].push_back(pred[i]);
  CalibrationCurve curve;
  for (const auto& [label, values] : groups) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    curve.push_back({label, mean, std::sqrt(var / n), values.size()});
  }
  return curve;
}

}  // namespace urgency
