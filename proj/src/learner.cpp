#include "urgency/learner.hpp"

#include <numeric>
#include <string>

#include "urgency/error.hpp"
#include "urgency/metrics.hpp"

namespace urgency {

namespace {

constexpr std::pair<LearnerKind, std::string_view> kLearnerNames[] = {
    {LearnerKind::kLr, "lr"},   {LearnerKind::kOrr, "orr"}, {LearnerKind::kRf, "rf"},
    {LearnerKind::kXgb, "xgb"}, {LearnerKind::kSvr, "svr"}, {LearnerKind::kNn, "nn"},
    {LearnerKind::kMean, "mean"},
};

template <class M>
const M& expect(const TrainedModel& model) {
  if (const M* m = std::get_if<M>(&model)) return *m;
  throw ConfigError("trained model does not match the learner kind");
}

Predictions from_classes(const ClassPrediction& cp, std::span<const double> class_values,
                         Task task) {
  Predictions out;
  out.value = cp.classes;
  if (task == Task::kBinary) {
    std::size_t positive = class_values.size();
    for (std::size_t c = 0; c < class_values.size(); ++c) {
      if (class_values[c] == 1.0) positive = c;
    }
    out.score.resize(cp.proba.size(), 0.0);
    for (std::size_t r = 0; r < cp.proba.size(); ++r) {
      if (positive < class_values.size()) out.score[r] = cp.proba[r][positive];
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(LearnerKind kind) {
  for (const auto& [k, name] : kLearnerNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::string_view to_string(Task task) {
  return task == Task::kBinary ? "binary" : "multiclass";
}

LearnerKind parse_learner_kind(std::string_view name) {
  for (const auto& [k, n] : kLearnerNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown learner '" + std::string(name) +
                    "' (expected lr, orr, rf, xgb, svr, nn or mean)");
}

Task parse_task(std::string_view name) {
  if (name == "multiclass") return Task::kMulticlass;
  if (name == "binary") return Task::kBinary;
  throw ConfigError("unknown task '" + std::string(name) + "' (expected multiclass or binary)");
}

bool is_regressor(LearnerKind kind) {
  return kind != LearnerKind::kRf && kind != LearnerKind::kXgb;
}

void LearnerSpec::validate() const {
  const bool regression_only = kind == LearnerKind::kLr || kind == LearnerKind::kOrr ||
                               kind == LearnerKind::kSvr || kind == LearnerKind::kMean;
  if (regression_only && task == Task::kBinary) {
    throw ConfigError("learner '" + std::string(to_string(kind)) +
                      "' supports only the multiclass task");
  }
  if (!(orr_alpha >= 0.0)) throw ConfigError("orr alpha must be >= 0");
  if (forest.n_trees < 1) throw ConfigError("rf n_trees must be >= 1");
  if (boosting.n_rounds < 0 || !(boosting.learning_rate >= 0.0 && boosting.learning_rate <= 1.0) ||
      boosting.max_depth < 1 || !(boosting.l2_lambda >= 0.0) || !(boosting.min_child_weight >= 0.0)) {
    throw ConfigError(
        "xgb needs n_rounds >= 0, learning_rate in [0, 1], max_depth >= 1, lambda >= 0");
  }
  if (!(svr.c > 0.0) || !(svr.epsilon >= 0.0) || !(svr.tol > 0.0) ||
      (svr.gamma && !(*svr.gamma > 0.0)) || !(svr.cache_mb > 0.0)) {
    throw ConfigError("svr needs C > 0, epsilon >= 0, tol > 0, gamma > 0, cache_mb > 0");
  }
  if (!(nn_dropout >= 0.0 && nn_dropout < 1.0)) throw ConfigError("nn dropout must lie in [0, 1)");
  if (nn.epochs < 1 || nn.batch_size < 1 || !(nn.learning_rate > 0.0)) {
    throw ConfigError("nn needs epochs >= 1, batch_size >= 1, learning_rate > 0");
  }
}

LearnerSpec LearnerSpec::with_seed(std::uint64_t seed) const {
  LearnerSpec out = *this;
  out.forest.seed = seed;
  out.boosting.seed = seed;
  out.nn.seed = seed;
  return out;
}

TrainedModel fit_learner(const LearnerSpec& spec, const SparseFeatureMatrix& x,
                         std::span<const double> labels) {
  spec.validate();
  std::vector<double> y(labels.begin(), labels.end());
  if (spec.task == Task::kBinary) {
    for (auto& v : y) v = binarize(v);
  }
  switch (spec.kind) {
    case LearnerKind::kLr:
      return fit_linear(x, y);
    case LearnerKind::kOrr:
      return fit_ordinal_ridge(x, y, spec.orr_alpha);
    case LearnerKind::kRf:
      return fit_forest(x, y, spec.forest);
    case LearnerKind::kXgb:
      return fit_boosted(x, y, spec.boosting);
    case LearnerKind::kSvr:
      return fit_svr(x, y, spec.svr);
    case LearnerKind::kNn: {
      const MlpTask task = spec.task == Task::kBinary ? MlpTask::kBinary : MlpTask::kRegression;
      MlpModel init = init_mlp(x.n_cols(), spec.nn_dropout, task, spec.nn.seed);
      return train_mlp(std::move(init), x, y, spec.nn);
    }
    case LearnerKind::kMean: {
      if (y.empty()) throw DataError("mean baseline needs at least one row");
      return MeanModel{std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size())};
    }
  }
  throw ConfigError("unhandled learner kind");
}

Predictions predict_learner(const LearnerSpec& spec, const TrainedModel& model,
                            const SparseFeatureMatrix& x) {
  Predictions out;
  switch (spec.kind) {
    case LearnerKind::kLr:
    case LearnerKind::kOrr:
      out.value = predict_linear(expect<LinearModel>(model), x);
      return out;
    case LearnerKind::kSvr:
      out.value = predict_svr(expect<SvrModel>(model), x);
      return out;
    case LearnerKind::kMean:
      out.value.assign(x.n_rows(), expect<MeanModel>(model).mean);
      return out;
    case LearnerKind::kRf: {
      const auto& m = expect<ForestModel>(model);
      return from_classes(predict_forest(m, x), m.class_values, spec.task);
    }
    case LearnerKind::kXgb: {
      const auto& m = expect<BoostedModel>(model);
      return from_classes(predict_boosted(m, x), m.class_values, spec.task);
    }
    case LearnerKind::kNn: {
      const auto& m = expect<MlpModel>(model);
      auto raw = predict_mlp(m, x);
      if (spec.task == Task::kBinary) {
        out.score = raw;
        out.value.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) out.value[i] = raw[i] >= 0.5 ? 1.0 : 0.0;
      } else {
        out.value = std::move(raw);
      }
      return out;
    }
  }
  throw ConfigError("unhandled learner kind");
}

}  // namespace urgency
