#ifndef URGENCY_LINEAR_HPP_
#define URGENCY_LINEAR_HPP_

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "urgency/featurize.hpp"

namespace urgency {

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::optional<std::pair<double, double>> clamp_range;
  double ridge_alpha = 0.0;
  // Set when the Gram matrix needed diagonal jitter to factor.
  bool degenerate = false;
};

inline constexpr double kSingularConditionLimit = 1e12;
inline constexpr double kGramJitter = 1e-8;

// Ordinary least squares with an unpenalized intercept.
LinearModel fit_linear(const SparseFeatureMatrix& x, std::span<const double> y);

// Ridge on the numeric labels (intercept unpenalized); predictions are
// clamped to the 1..7 label range.
LinearModel fit_ordinal_ridge(const SparseFeatureMatrix& x, std::span<const double> y,
                              double alpha = 1.0);

std::vector<double> predict_linear(const LinearModel& model, const SparseFeatureMatrix& x);

}  // namespace urgency

#endif  // URGENCY_LINEAR_HPP_
