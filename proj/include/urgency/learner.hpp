#ifndef URGENCY_LEARNER_HPP_
#define URGENCY_LEARNER_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "urgency/featurize.hpp"
#include "urgency/linear.hpp"
#include "urgency/mlp.hpp"
#include "urgency/svr.hpp"
#include "urgency/tree.hpp"

namespace urgency {

// kMean predicts the training label mean; it is a baseline, not a model
// under study.
enum class LearnerKind { kLr, kOrr, kRf, kXgb, kSvr, kNn, kMean };
enum class Task { kMulticlass, kBinary };

std::string_view to_string(LearnerKind kind);
std::string_view to_string(Task task);
LearnerKind parse_learner_kind(std::string_view name);
Task parse_task(std::string_view name);

// Regression learners emit decimals; classifiers emit class labels.
bool is_regressor(LearnerKind kind);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kSvr;
  Task task = Task::kMulticlass;
  double orr_alpha = 1.0;
  ForestConfig forest;
  BoostingConfig boosting;
  SvrConfig svr;
  double nn_dropout = 0.85;
  MlpTrainConfig nn;

  // Throws ConfigError for incompatible learner/task pairs and bad values.
  void validate() const;
  // Copy with every learner seed replaced.
  LearnerSpec with_seed(std::uint64_t seed) const;
};

struct MeanModel {
  double mean = 0.0;
};

using TrainedModel = std::variant<LinearModel, ForestModel, BoostedModel, SvrModel, MlpModel,
                                  MeanModel>;

struct Predictions {
  // Multiclass: predicted urgency (decimal or class). Binary: predicted class 0/1.
  std::vector<double> value;
  // Binary only: probability of the urgent class.
  std::vector<double> score;
};

// Labels are urgency values; binary tasks binarize them before fitting.
TrainedModel fit_learner(const LearnerSpec& spec, const SparseFeatureMatrix& x,
                         std::span<const double> labels);

Predictions predict_learner(const LearnerSpec& spec, const TrainedModel& model,
                            const SparseFeatureMatrix& x);

}  // namespace urgency

#endif  // URGENCY_LEARNER_HPP_
