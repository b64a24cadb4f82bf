#ifndef URGENCY_METRICS_HPP_
#define URGENCY_METRICS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "urgency/corpus.hpp"

namespace urgency {

struct MetricsReport {
  double rmse = 0.0;
  double spearman_rho = 0.0;
  std::size_t n = 0;
};

struct BinaryReport {
  double auc_macro = 0.0;
  double f1_weighted = 0.0;
  double f1_class0 = 0.0;
  double f1_class1 = 0.0;
  double threshold = 0.5;
};

struct KappaResult {
  double kappa = 0.0;
  const char* weighting = "linear";
  std::size_t n_items = 0;
};

struct CalibrationBucket {
  double label = 0.0;
  double mean_pred = 0.0;
  double stdev_pred = 0.0;  // population
  std::size_t count = 0;
};

using CalibrationCurve = std::vector<CalibrationBucket>;

struct F1Scores {
  double class0 = 0.0;
  double class1 = 0.0;
  double weighted = 0.0;
};

double rmse(std::span<const double> pred, std::span<const double> truth);

// Average ranks (1-based); tied values share the mean of the ranks they span.
std::vector<double> midranks(std::span<const double> values);

double spearman_rho(std::span<const double> pred, std::span<const double> truth);

int binarize(UrgencyLabel label);
int binarize(double label_value);

double roc_auc(std::span<const double> scores, std::span<const int> labels);

F1Scores f1_scores(std::span<const int> pred, std::span<const int> truth);

// Linearly weighted Cohen's kappa over the given ordered categories.
KappaResult weighted_kappa_linear(std::span<const double> rater_a, std::span<const double> rater_b,
                                  std::span<const double> categories);

// Thresholds 0.05, 0.10, ..., 0.95.
std::vector<double> default_threshold_grid();

BinaryReport binary_report(std::span<const double> scores, std::span<const int> labels,
                           double threshold);

std::vector<BinaryReport> sweep_thresholds(std::span<const double> scores,
                                           std::span<const int> labels,
                                           std::span<const double> grid);

// Report with the highest weighted F1; the lowest threshold wins ties.
const BinaryReport& best_by_weighted_f1(std::span<const BinaryReport> sweep);

CalibrationCurve calibration_curve(std::span<const double> pred, std::span<const double> truth);

}  // namespace urgency

#endif  // URGENCY_METRICS_HPP_
