#include "urgency/crossval.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <set>
#include <thread>

#include "urgency/error.hpp"
#include "urgency/random.hpp"

namespace urgency {

namespace {

std::vector<TokenizedPost> pick(std::span<const TokenizedPost> docs,
                                std::span<const std::size_t> rows) {
  std::vector<TokenizedPost> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(docs[r]);
  return out;
}

std::vector<double> pick(std::span<const double> values, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(values[r]);
  return out;
}

struct FoldOutput {
  Predictions pred;
  FoldAudit audit;
};

FoldOutput run_fold(int fold, std::span<const LabeledPost> posts,
                    std::span<const TokenizedPost> docs, const FeatureSource& source,
                    const LearnerSpec& spec, const FoldAssignment& folds,
                    std::span<const double> labels, std::uint64_t seed) {
  FoldOutput out;
  auto& audit = out.audit;
  audit.fold = fold;
  std::set<std::string> train_students, val_students;
  for (std::size_t r = 0; r < posts.size(); ++r) {
    const auto& student = posts[r].post.student_id;
    if (folds.fold_of(student) == fold) {
      audit.val_rows.push_back(r);
      val_students.insert(student);
    } else {
      audit.train_rows.push_back(r);
      train_students.insert(student);
    }
  }
  audit.train_students.assign(train_students.begin(), train_students.end());
  audit.val_students.assign(val_students.begin(), val_students.end());

  SparseFeatureMatrix train_x;
  const FeatureState state = fit_features(source, docs, audit.train_rows, &train_x);
  if (source.kind == FeatureKind::kText) {
    for (auto r : audit.train_rows) audit.featurizer_post_ids.push_back(docs[r].post_id);
    audit.vocab_n_docs = state.vocab.n_docs;
  }
  const SparseFeatureMatrix val_x = apply_features(state, source, docs, audit.val_rows);

  const LearnerSpec fold_spec = spec.with_seed(derive_seed(seed, static_cast<std::uint64_t>(fold)));
  const auto train_y = pick(labels, audit.train_rows);
  const TrainedModel model = fit_learner(fold_spec, train_x, train_y);
  out.pred = predict_learner(fold_spec, model, val_x);
  return out;
}

}  // namespace

int FoldAssignment::fold_of(const std::string& student_id) const {
  const auto it = fold_of_student.find(student_id);
  if (it == fold_of_student.end()) throw DataError("student '" + student_id + "' has no fold");
  return it->second;
}

FoldAssignment grouped_kfold(std::span<const LabeledPost> posts, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k_folds must be >= 2");
  std::set<std::string> unique;
  for (const auto& p : posts) unique.insert(p.post.student_id);
  if (unique.size() < static_cast<std::size_t>(k)) {
    throw DataError("only " + std::to_string(unique.size()) + " distinct students for " +
                    std::to_string(k) + " folds");
  }
  std::vector<std::string> students(unique.begin(), unique.end());
  Rng rng(seed);
  shuffle(std::span<std::string>(students), rng);
  FoldAssignment out;
  out.n_folds = k;
  out.seed = seed;
  for (std::size_t i = 0; i < students.size(); ++i) {
    out.fold_of_student[students[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return out;
}

FeatureState fit_features(const FeatureSource& source, std::span<const TokenizedPost> docs,
                          std::span<const std::size_t> rows, SparseFeatureMatrix* train_x) {
  FeatureState state;
  state.kind = source.kind;
  if (source.kind == FeatureKind::kEmbeddings) {
    state.embedding_dim = source.embedded.n_cols();
    if (train_x) *train_x = source.embedded.select_rows(rows);
    return state;
  }
  source.text.validate();
  state.config = source.text;
  const auto train_docs = pick(docs, rows);
  state.vocab = build_vocabulary(train_docs, state.config);
  if (train_x) *train_x = vectorize(train_docs, state.vocab, state.config);
  return state;
}

SparseFeatureMatrix apply_features(const FeatureState& state, const FeatureSource& source,
                                   std::span<const TokenizedPost> docs,
                                   std::span<const std::size_t> rows) {
  if (state.kind == FeatureKind::kEmbeddings) {
    if (source.embedded.n_cols() != state.embedding_dim) {
      throw DataError("embedding width " + std::to_string(source.embedded.n_cols()) +
                      " does not match the fitted width " + std::to_string(state.embedding_dim));
    }
    return source.embedded.select_rows(rows);
  }
  return vectorize(pick(docs, rows), state.vocab, state.config);
}

CvResult cross_validate(std::span<const LabeledPost> posts, std::span<const TokenizedPost> docs,
                        const FeatureSource& source, const LearnerSpec& spec,
                        const CvOptions& options) {
  spec.validate();
  if (source.kind == FeatureKind::kText && docs.size() != posts.size()) {
    throw DataError("token lists are not aligned with the posts");
  }
  if (source.kind == FeatureKind::kEmbeddings && source.embedded.n_rows() != posts.size()) {
    throw DataError("embedding rows are not aligned with the posts");
  }
  const FoldAssignment folds = grouped_kfold(posts, options.k, options.seed);
  std::vector<double> labels(posts.size());
  for (std::size_t r = 0; r < posts.size(); ++r) labels[r] = posts[r].label.value();

  const auto k = static_cast<std::size_t>(options.k);
  std::vector<FoldOutput> outputs(k);
  std::vector<std::exception_ptr> errors(k);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < k; f = next++) {
      try {
        spdlog::info("fold {}/{}: fitting {}", f + 1, k, to_string(spec.kind));
        outputs[f] = run_fold(static_cast<int>(f), posts, docs, source, spec, folds, labels,
                              options.seed);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(options.jobs, 1)), 1, k);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t f = 0; f < k; ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(f + 1) + ": " + e.what());
    }
  }

  CvResult result;
  const bool binary = spec.task == Task::kBinary;
  result.truth = labels;
  if (binary) {
    for (auto& v : result.truth) v = binarize(v);
    result.oof.score.assign(posts.size(), 0.0);
  }
  result.oof.value.assign(posts.size(), 0.0);
  result.fold_of_row.assign(posts.size(), -1);
  for (std::size_t f = 0; f < k; ++f) {
    const auto& out = outputs[f];
    const auto& rows = out.audit.val_rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      result.oof.value[rows[i]] = out.pred.value[i];
      if (binary) result.oof.score[rows[i]] = out.pred.score[i];
      result.fold_of_row[rows[i]] = static_cast<int>(f);
    }
    result.audits.push_back(out.audit);
  }

  std::vector<int> truth_int(result.truth.begin(), result.truth.end());
  if (binary) {
    result.pooled_binary = binary_report(result.oof.score, truth_int, 0.5);
  } else {
    result.pooled.rmse = rmse(result.oof.value, result.truth);
    result.pooled.n = posts.size();
    try {
      result.pooled.spearman_rho = spearman_rho(result.oof.value, result.truth);
    } catch (const DataError& e) {
      spdlog::warn("pooled Spearman undefined: {}", e.what());
      result.pooled.spearman_rho = std::numeric_limits<double>::quiet_NaN();
    }
  }

  // Fold means over folds where the metrics are defined.
  for (std::size_t f = 0; f < k; ++f) {
    const auto& rows = outputs[f].audit.val_rows;
    const auto pred = pick(binary ? std::span<const double>(result.oof.score)
                                  : std::span<const double>(result.oof.value),
                           rows);
    const auto truth = pick(result.truth, rows);
    try {
      if (binary) {
        const std::vector<int> t(truth.begin(), truth.end());
        const BinaryReport r = binary_report(pred, t, 0.5);
        result.fold_mean_binary.auc_macro += r.auc_macro;
        result.fold_mean_binary.f1_weighted += r.f1_weighted;
        result.fold_mean_binary.f1_class0 += r.f1_class0;
        result.fold_mean_binary.f1_class1 += r.f1_class1;
      } else {
        const double fold_rmse = rmse(pred, truth);
        const double fold_rho = spearman_rho(pred, truth);
        result.fold_mean.rmse += fold_rmse;
        result.fold_mean.spearman_rho += fold_rho;
      }
      ++result.folds_in_mean;
    } catch (const DataError& e) {
      spdlog::warn("fold {} metrics undefined: {}", f + 1, e.what());
    }
  }
  if (result.folds_in_mean > 0) {
    const double m = static_cast<double>(result.folds_in_mean);
    result.fold_mean.rmse /= m;
    result.fold_mean.spearman_rho /= m;
    result.fold_mean.n = result.folds_in_mean;
    result.fold_mean_binary.auc_macro /= m;
    result.fold_mean_binary.f1_weighted /= m;
    result.fold_mean_binary.f1_class0 /= m;
    result.fold_mean_binary.f1_class1 /= m;
  }
  return result;
}

}  // namespace urgency
