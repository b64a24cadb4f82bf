#ifndef URGENCY_FEATURIZE_HPP_
#define URGENCY_FEATURIZE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "urgency/corpus.hpp"
#include "urgency/preprocess.hpp"

namespace urgency {

enum class FeatureMode { kBow, kTfidf };

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view name);

struct FeaturizerConfig {
  FeatureMode mode = FeatureMode::kTfidf;
  int ngram_min = 1;
  int ngram_max = 1;
  double min_df = 0.01;
  double max_df = 0.99;
  bool unitize = false;

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

struct Vocabulary {
  std::vector<std::string> terms;       // sorted
  std::vector<std::size_t> doc_freq;    // aligned with terms
  std::unordered_map<std::string, std::size_t> index;
  std::size_t n_docs = 0;

  std::size_t size() const { return terms.size(); }
  // Smoothed inverse document frequency ln((1 + n) / (1 + df)) + 1.
  double idf(std::size_t column) const;

  static Vocabulary from_terms(std::vector<std::string> terms,
                               std::vector<std::size_t> doc_freq, std::size_t n_docs);
};

// Compressed sparse rows. Columns within a row are strictly increasing.
class SparseFeatureMatrix {
 public:
  SparseFeatureMatrix() = default;
  explicit SparseFeatureMatrix(std::size_t n_cols) : n_cols_(n_cols) {}

  std::size_t n_rows() const { return row_ptr_.size() - 1; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t nnz() const { return cols_.size(); }

  std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return {cols_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  // Appends a row; entries must be sorted by column without duplicates.
  void append_row(std::span<const std::uint32_t> cols, std::span<const double> values);
  // Appends a dense row, storing only nonzeros.
  void append_dense_row(std::span<const double> values);

  SparseFeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  double row_dot(std::size_t r, std::span<const double> dense) const;
  double row_squared_norm(std::size_t r) const;

  bool operator==(const SparseFeatureMatrix&) const = default;

 private:
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<double> values_;
};

// Extracts the space-joined n-grams of the given orders from a token list.
std::vector<std::string> extract_ngrams(std::span<const std::string> tokens,
                                        int ngram_min, int ngram_max);

Vocabulary build_vocabulary(std::span<const TokenizedPost> docs,
                            const FeaturizerConfig& config);

SparseFeatureMatrix vectorize(std::span<const TokenizedPost> docs,
                              const Vocabulary& vocab, const FeaturizerConfig& config);

std::string vocabulary_to_csv(const Vocabulary& vocab);

struct EmbeddingMatrix {
  std::size_t dim = 0;
  std::vector<std::string> row_ids;
  std::vector<std::vector<double>> rows;

  std::size_t n_rows() const { return rows.size(); }
};

// Format: first line "#dim=<d>", then "post_id<TAB>v1<TAB>...<TAB>vd" rows.
EmbeddingMatrix parse_embeddings(std::string_view text);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

// Rows of the embedding file ordered to match the given post ids. Throws
// DataError listing any ids absent from the file.
SparseFeatureMatrix align_embeddings(const EmbeddingMatrix& embeddings,
                                     std::span<const std::string> post_ids);

}  // namespace urgency

#endif  // URGENCY_FEATURIZE_HPP_
