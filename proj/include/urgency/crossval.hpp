#ifndef URGENCY_CROSSVAL_HPP_
#define URGENCY_CROSSVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "urgency/corpus.hpp"
#include "urgency/featurize.hpp"
#include "urgency/learner.hpp"
#include "urgency/metrics.hpp"
#include "urgency/preprocess.hpp"

namespace urgency {

struct FoldAssignment {
  int n_folds = 0;
  std::map<std::string, int> fold_of_student;
  std::uint64_t seed = 0;

  int fold_of(const std::string& student_id) const;
};

// Sorted unique student ids, shuffled with the seed, dealt round-robin.
FoldAssignment grouped_kfold(std::span<const LabeledPost> posts, int k, std::uint64_t seed);

enum class FeatureKind { kText, kEmbeddings };

// Where the feature matrix comes from. Text features are refit on every
// training split; embeddings are precomputed and row-aligned with the posts.
struct FeatureSource {
  FeatureKind kind = FeatureKind::kText;
  FeaturizerConfig text;
  SparseFeatureMatrix embedded;
};

// Fitted featurizer, persisted with a model.
struct FeatureState {
  FeatureKind kind = FeatureKind::kText;
  FeaturizerConfig config;
  Vocabulary vocab;
  std::size_t embedding_dim = 0;
};

// Fits the featurizer on the given rows only and returns their features.
FeatureState fit_features(const FeatureSource& source, std::span<const TokenizedPost> docs,
                          std::span<const std::size_t> rows, SparseFeatureMatrix* train_x);

// Features of the given rows under a fitted state.
SparseFeatureMatrix apply_features(const FeatureState& state, const FeatureSource& source,
                                   std::span<const TokenizedPost> docs,
                                   std::span<const std::size_t> rows);

// Per-fold record of which rows and students went where.
struct FoldAudit {
  int fold = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  std::vector<std::string> train_students;
  std::vector<std::string> val_students;
  // Post ids whose documents the featurizer saw while fitting.
  std::vector<std::string> featurizer_post_ids;
  std::size_t vocab_n_docs = 0;
};

struct CvResult {
  Predictions oof;                 // out-of-fold, aligned with the input posts
  std::vector<int> fold_of_row;
  std::vector<double> truth;       // urgency values (multiclass) or 0/1 (binary)
  // Multiclass reports.
  MetricsReport pooled;
  MetricsReport fold_mean;
  // Binary reports at threshold 0.5.
  BinaryReport pooled_binary;
  BinaryReport fold_mean_binary;
  std::size_t folds_in_mean = 0;   // folds where the metrics were defined
  std::vector<FoldAudit> audits;
};

struct CvOptions {
  int k = 10;
  std::uint64_t seed = 42;
  int jobs = 1;
};

CvResult cross_validate(std::span<const LabeledPost> posts, std::span<const TokenizedPost> docs,
                        const FeatureSource& source, const LearnerSpec& spec,
                        const CvOptions& options);

}  // namespace urgency

#endif  // URGENCY_CROSSVAL_HPP_
