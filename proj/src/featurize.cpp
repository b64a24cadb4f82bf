#include "urgency/featurize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "urgency/csv.hpp"
#include "urgency/error.hpp"

namespace urgency {

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::kBow ? "bow" : "tfidf";
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "bow") return FeatureMode::kBow;
  if (name == "tfidf") return FeatureMode::kTfidf;
  throw ConfigError("unknown feature mode '" + std::string(name) + "' (bow | tfidf)");
}

void FeaturizerConfig::validate() const {
  if (ngram_min < 1 || ngram_max < ngram_min) {
    throw ConfigError("n-gram range must satisfy 1 <= ngram_min <= ngram_max");
  }
  if (!(min_df >= 0.0 && max_df <= 1.0 && min_df < max_df)) {
    throw ConfigError("document-frequency cutoffs must satisfy 0 <= min_df < max_df <= 1");
  }
}

double Vocabulary::idf(std::size_t column) const {
  return std::log((1.0 + static_cast<double>(n_docs)) /
                  (1.0 + static_cast<double>(doc_freq[column]))) +
         1.0;
}

Vocabulary Vocabulary::from_terms(std::vector<std::string> terms,
                                  std::vector<std::size_t> doc_freq, std::size_t n_docs) {
  if (terms.size() != doc_freq.size()) {
    throw DataError("vocabulary terms and document frequencies differ in length");
  }
  if (!std::is_sorted(terms.begin(), terms.end())) {
    throw DataError("vocabulary terms must be sorted");
  }
  Vocabulary vocab;
  vocab.terms = std::move(terms);
  vocab.doc_freq = std::move(doc_freq);
  vocab.n_docs = n_docs;
  vocab.index.reserve(vocab.terms.size());
  for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
    if (vocab.doc_freq[i] < 1 || vocab.doc_freq[i] > n_docs) {
      throw DataError("document frequency of '" + vocab.terms[i] + "' out of range");
    }
    if (!vocab.index.emplace(vocab.terms[i], i).second) {
      throw DataError("duplicate vocabulary term '" + vocab.terms[i] + "'");
    }
  }
  return vocab;
}

void SparseFeatureMatrix::append_row(std::span<const std::uint32_t> cols,
                                     std::span<const double> values) {
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= n_cols_ || (i > 0 && cols[i] <= cols[i - 1]) || !std::isfinite(values[i])) {
      throw DataError("malformed sparse row");
    }
  }
  cols_.insert(cols_.end(), cols.begin(), cols.end());
  values_.insert(values_.end(), values.begin(), values.end());
  row_ptr_.push_back(cols_.size());
}

void SparseFeatureMatrix::append_dense_row(std::span<const double> values) {
  if (values.size() != n_cols_) throw DataError("dense row width mismatch");
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (!std::isfinite(values[c])) throw DataError("non-finite feature value");
    if (values[c] != 0.0) {
      cols_.push_back(static_cast<std::uint32_t>(c));
      values_.push_back(values[c]);
    }
  }
  row_ptr_.push_back(cols_.size());
}

SparseFeatureMatrix SparseFeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  SparseFeatureMatrix out(n_cols_);
  for (std::size_t r : rows) out.append_row(row_cols(r), row_values(r));
  return out;
}

double SparseFeatureMatrix::row_dot(std::size_t r, std::span<const double> dense) const {
  double sum = 0.0;
  const auto cols = row_cols(r);
  const auto vals = row_values(r);
  for (std::size_t i = 0; i < cols.size(); ++i) sum += vals[i] * dense[cols[i]];
  return sum;
}

double SparseFeatureMatrix::row_squared_norm(std::size_t r) const {
  double sum = 0.0;
  for (double v : row_values(r)) sum += v * v;
  return sum;
}

std::vector<std::string> extract_ngrams(std::span<const std::string> tokens,
                                        int ngram_min, int ngram_max) {
  std::vector<std::string> grams;
  for (int n = ngram_min; n <= ngram_max; ++n) {
    const auto width = static_cast<std::size_t>(n);
    if (tokens.size() < width) break;
    for (std::size_t start = 0; start + width <= tokens.size(); ++start) {
      std::string gram = tokens[start];
      for (std::size_t k = 1; k < width; ++k) {
        gram.push_back(' ');
        gram += tokens[start + k];
      }
      grams.push_back(std::move(gram));
    }
  }
  return grams;
}

Vocabulary build_vocabulary(std::span<const TokenizedPost> docs,
                            const FeaturizerConfig& config) {
  config.validate();
  if (std::none_of(docs.begin(), docs.end(),
                   [](const TokenizedPost& d) { return !d.tokens.empty(); })) {
    throw DataError("cannot build a vocabulary: every document is empty");
  }
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    auto grams = extract_ngrams(doc.tokens, config.ngram_min, config.ngram_max);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++df[std::move(g)];
  }

  const double n = static_cast<double>(docs.size());
  // Proportions resolve to whole document counts; the slack absorbs
  // representation error such as 0.01 * 300 = 3.0000000000000004.
  const auto min_count = static_cast<std::size_t>(std::max(0.0, std::ceil(config.min_df * n - 1e-9)));
  const auto max_count = static_cast<std::size_t>(std::floor(config.max_df * n + 1e-9));

  std::vector<std::string> terms;
  std::vector<std::size_t> freqs;
  for (auto& [term, count] : df) {
    if (count >= min_count && count <= max_count) {
      terms.push_back(term);
      freqs.push_back(count);
    }
  }
  if (terms.empty()) {
    std::ostringstream msg;
    msg << "empty vocabulary after document-frequency cutoffs min_df=" << config.min_df
        << " (>= " << min_count << " docs), max_df=" << config.max_df << " (<= "
        << max_count << " docs) over " << docs.size() << " documents";
    throw DataError(msg.str());
  }
  return Vocabulary::from_terms(std::move(terms), std::move(freqs), docs.size());
}

SparseFeatureMatrix vectorize(std::span<const TokenizedPost> docs,
                              const Vocabulary& vocab, const FeaturizerConfig& config) {
  SparseFeatureMatrix out(vocab.size());
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  for (const auto& doc : docs) {
    std::map<std::uint32_t, double> counts;
    for (const auto& g : extract_ngrams(doc.tokens, config.ngram_min, config.ngram_max)) {
      if (auto it = vocab.index.find(g); it != vocab.index.end()) {
        counts[static_cast<std::uint32_t>(it->second)] += 1.0;
      }
    }
    cols.clear();
    vals.clear();
    for (const auto& [c, count] : counts) {
      cols.push_back(c);
      vals.push_back(config.mode == FeatureMode::kTfidf ? count * vocab.idf(c) : count);
    }
    const bool normalize = config.mode == FeatureMode::kTfidf || config.unitize;
    if (normalize && !vals.empty()) {
      double sq = 0.0;
      for (double v : vals) sq += v * v;
      const double norm = std::sqrt(sq);
      for (double& v : vals) v /= norm;
    }
    out.append_row(cols, vals);
  }
  return out;
}

std::string vocabulary_to_csv(const Vocabulary& vocab) {
  std::string out = csv::format_row({"term", "doc_freq"});
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out += csv::format_row({vocab.terms[i], std::to_string(vocab.doc_freq[i])});
  }
  return out;
}

EmbeddingMatrix parse_embeddings(std::string_view text) {
  EmbeddingMatrix m;
  std::size_t line_no = 0;
  bool have_header = false;
  std::unordered_set<std::string> seen;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string where = "embedding file line " + std::to_string(line_no);

    if (!have_header) {
      constexpr std::string_view kPrefix = "#dim=";
      std::size_t dim = 0;
      if (!line.starts_with(kPrefix)) throw DataError(where + ": expected '#dim=<d>' header");
      const auto digits = line.substr(kPrefix.size());
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dim);
      if (ec != std::errc() || ptr != digits.data() + digits.size() || dim == 0) {
        throw DataError(where + ": invalid dimension in header");
      }
      m.dim = dim;
      have_header = true;
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t fpos = 0;
    while (true) {
      const std::size_t tab = line.find('\t', fpos);
      fields.push_back(line.substr(fpos, tab == std::string_view::npos ? line.size() - fpos : tab - fpos));
      if (tab == std::string_view::npos) break;
      fpos = tab + 1;
    }
    if (fields.size() != m.dim + 1) {
      throw DataError(where + ": expected " + std::to_string(m.dim) + " values, found " +
                      std::to_string(fields.size() - 1));
    }
    std::string id(fields[0]);
    if (id.empty()) throw DataError(where + ": empty post_id");
    if (!seen.insert(id).second) throw DataError(where + ": duplicate post_id '" + id + "'");
    std::vector<double> row(m.dim);
    for (std::size_t k = 0; k < m.dim; ++k) {
      const auto f = fields[k + 1];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[k]);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(row[k])) {
        throw DataError(where + ": non-numeric or non-finite value in column " +
                        std::to_string(k + 1));
      }
    }
    m.row_ids.push_back(std::move(id));
    m.rows.push_back(std::move(row));
  }
  if (!have_header) throw DataError("embedding file is empty");
  return m;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_embeddings(buffer.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

SparseFeatureMatrix align_embeddings(const EmbeddingMatrix& embeddings,
                                     std::span<const std::string> post_ids) {
  std::unordered_map<std::string_view, std::size_t> by_id;
  for (std::size_t i = 0; i < embeddings.row_ids.size(); ++i) by_id[embeddings.row_ids[i]] = i;
  std::vector<std::string> missing;
  SparseFeatureMatrix out(embeddings.dim);
  for (const auto& id : post_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      missing.push_back(id);
      continue;
    }
    out.append_dense_row(embeddings.rows[it->second]);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ... (" + std::to_string(missing.size()) + " total)";
    throw DataError("embedding alignment: post ids missing from embedding file: " + list);
  }
  return out;
}

}  // namespace urgency
