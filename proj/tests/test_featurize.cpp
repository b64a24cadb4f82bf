#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "urgency/error.hpp"
#include "urgency/featurize.hpp"

using namespace urgency;

namespace {

std::vector<TokenizedPost> docs_of(const std::vector<std::vector<std::string>>& tokens) {
  std::vector<TokenizedPost> docs;
  for (std::size_t i = 0; i < tokens.size(); ++i) docs.push_back({std::to_string(i), tokens[i]});
  return docs;
}

FeaturizerConfig open_cutoffs(FeatureMode mode) {
  FeaturizerConfig c;
  c.mode = mode;
  c.min_df = 0.0;
  c.max_df = 1.0;
  return c;
}

std::vector<double> dense_row(const SparseFeatureMatrix& m, std::size_t r) {
  std::vector<double> out(m.n_cols(), 0.0);
  const auto cols = m.row_cols(r);
  const auto vals = m.row_values(r);
  for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] = vals[k];
  return out;
}

}  // namespace

TEST(Vocabulary, TinyCorpus) {
  const auto docs = docs_of({{"a", "b"}, {"a"}});
  const auto vocab = build_vocabulary(docs, open_cutoffs(FeatureMode::kTfidf));
  EXPECT_EQ(vocab.terms, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(vocab.doc_freq, (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(vocab.n_docs, 2u);
  EXPECT_DOUBLE_EQ(vocab.idf(0), 1.0);
  EXPECT_DOUBLE_EQ(vocab.idf(1), std::log(1.5) + 1.0);
}

TEST(Vocabulary, CutoffsKeepOnlyTermsWithinBounds) {
  Rng rng(21);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f", "g", "h"};
  std::vector<std::vector<std::string>> tokens(50);
  for (auto& t : tokens) {
    const auto n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) t.push_back(pool[rng.below(pool.size())]);
  }
  const auto docs = docs_of(tokens);
  FeaturizerConfig cfg;
  cfg.min_df = 0.2;
  cfg.max_df = 0.5;
  const auto vocab = build_vocabulary(docs, cfg);
  for (const auto& term : pool) {
    std::size_t df = 0;
    for (const auto& t : tokens) df += std::find(t.begin(), t.end(), term) != t.end();
    const bool kept = vocab.index.count(term) > 0;
    EXPECT_EQ(kept, df >= 10 && df <= 25) << term << " df=" << df;
  }
  EXPECT_TRUE(std::is_sorted(vocab.terms.begin(), vocab.terms.end()));
}

TEST(Vocabulary, EmptyAfterCutoffsIsDataError) {
  const auto docs = docs_of({{"a"}, {"b"}});
  FeaturizerConfig cfg;
  cfg.min_df = 0.9;
  EXPECT_THROW(build_vocabulary(docs, cfg), DataError);
}

TEST(FeaturizerConfig, RejectsInvertedRanges) {
  FeaturizerConfig cfg;
  cfg.ngram_min = 2;
  cfg.ngram_max = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.min_df = 0.5;
  cfg.max_df = 0.4;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Ngrams, Extraction) {
  const std::vector<std::string> t = {"x", "y", "z"};
  EXPECT_EQ(extract_ngrams(t, 1, 2),
            (std::vector<std::string>{"x", "y", "z", "x y", "y z"}));
  EXPECT_EQ(extract_ngrams(t, 3, 3), (std::vector<std::string>{"x y z"}));
  EXPECT_TRUE(extract_ngrams(t, 4, 4).empty());
}

// Reference values from sklearn TfidfVectorizer (smooth idf, l2 norm) on the
// same four documents.
TEST(Vectorize, TfidfMatchesReference) {
  const auto docs = docs_of({{"cat", "sat", "mat"},
                             {"cat", "cat", "dog"},
                             {"dog", "bird"},
                             {"bird", "bird", "bird", "cat"}});
  const auto cfg = open_cutoffs(FeatureMode::kTfidf);
  const auto vocab = build_vocabulary(docs, cfg);
  ASSERT_EQ(vocab.terms, (std::vector<std::string>{"bird", "cat", "dog", "mat", "sat"}));
  const std::vector<double> idf = {1.5108256237659907, 1.2231435513142097, 1.5108256237659907,
                                   1.916290731874155, 1.916290731874155};
  for (std::size_t c = 0; c < idf.size(); ++c) EXPECT_NEAR(vocab.idf(c), idf[c], 1e-12);

  const std::vector<std::vector<double>> expected = {
      {0.0, 0.41137791133379387, 0.0, 0.6445029922609534, 0.6445029922609534},
      {0.0, 0.8508160982744233, 0.5254635733493682, 0.0, 0.0},
      {0.7071067811865475, 0.0, 0.7071067811865475, 0.0, 0.0},
      {0.9654625885642675, 0.2605417242646253, 0.0, 0.0, 0.0}};
  const auto x = vectorize(docs, vocab, cfg);
  ASSERT_EQ(x.n_rows(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    const auto row = dense_row(x, r);
    for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(row[c], expected[r][c], 1e-12);
  }

  FeaturizerConfig half = cfg;
  half.ngram_max = 2;
  half.min_df = 0.5;
  EXPECT_EQ(build_vocabulary(docs, half).terms,
            (std::vector<std::string>{"bird", "cat", "dog"}));
}

TEST(Vectorize, BowCountsAndUnitize) {
  const auto docs = docs_of({{"a", "a", "b"}, {"b"}});
  auto cfg = open_cutoffs(FeatureMode::kBow);
  const auto vocab = build_vocabulary(docs, cfg);
  const auto x = vectorize(docs, vocab, cfg);
  EXPECT_EQ(dense_row(x, 0), (std::vector<double>{2.0, 1.0}));
  EXPECT_EQ(dense_row(x, 1), (std::vector<double>{0.0, 1.0}));

  cfg.unitize = true;
  const auto u = vectorize(docs, vocab, cfg);
  EXPECT_NEAR(u.row_squared_norm(0), 1.0, 1e-12);
  EXPECT_NEAR(dense_row(u, 0)[0], 2.0 / std::sqrt(5.0), 1e-12);
}

TEST(Vectorize, OutOfVocabularyDocumentIsZeroRow) {
  const auto train = docs_of({{"a"}, {"b"}});
  const auto cfg = open_cutoffs(FeatureMode::kTfidf);
  const auto vocab = build_vocabulary(train, cfg);
  const auto x = vectorize(docs_of({{"zzz", "yyy"}, {}}), vocab, cfg);
  EXPECT_EQ(x.n_rows(), 2u);
  EXPECT_EQ(x.nnz(), 0u);
  EXPECT_EQ(x.n_cols(), vocab.size());
}

TEST(Vectorize, TfidfRowsHaveUnitOrZeroNorm) {
  const auto posts = urgency::testing::synthetic_corpus(200, 30, 2);
  const auto docs = preprocess_corpus(posts);
  FeaturizerConfig cfg;
  cfg.ngram_max = 2;
  const auto vocab = build_vocabulary(docs, cfg);
  const auto x = vectorize(docs, vocab, cfg);
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    const double sq = x.row_squared_norm(r);
    EXPECT_TRUE(sq == 0.0 || std::abs(sq - 1.0) < 1e-12) << sq;
    for (double v : x.row_values(r)) EXPECT_GT(v, 0.0);
    const auto cols = x.row_cols(r);
    EXPECT_TRUE(std::adjacent_find(cols.begin(), cols.end(), std::greater_equal<>()) == cols.end());
  }
}

TEST(SparseMatrix, SelectRowsAndDot) {
  const auto m = urgency::testing::dense_matrix({{1, 0, 2}, {0, 0, 0}, {3, 4, 0}});
  EXPECT_EQ(m.nnz(), 4u);
  const std::vector<std::size_t> pick = {2, 0};
  const auto s = m.select_rows(pick);
  EXPECT_EQ(dense_row(s, 0), (std::vector<double>{3, 4, 0}));
  const std::vector<double> w = {1, 1, 1};
  EXPECT_EQ(s.row_dot(1, w), 3.0);
  EXPECT_EQ(m.row_squared_norm(2), 25.0);
}

TEST(Embeddings, ParseAndAlign) {
  const auto e = parse_embeddings("#dim=3\np1\t0.1\t0.2\t0.3\np2\t1\t0\t-1\n");
  EXPECT_EQ(e.dim, 3u);
  EXPECT_EQ(e.n_rows(), 2u);
  const std::vector<std::string> ids = {"p2", "p1"};
  const auto x = align_embeddings(e, ids);
  EXPECT_EQ(dense_row(x, 0), (std::vector<double>{1, 0, -1}));
  EXPECT_EQ(dense_row(x, 1), (std::vector<double>{0.1, 0.2, 0.3}));
}

TEST(Embeddings, WrongWidthNamesLine) {
  std::string text = "#dim=512\np1";
  for (int i = 0; i < 511; ++i) text += "\t0.5";
  text += "\n";
  try {
    parse_embeddings(text);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("512"), std::string::npos) << msg;
    EXPECT_NE(msg.find("511"), std::string::npos) << msg;
  }
}

TEST(Embeddings, MalformedInputs) {
  EXPECT_THROW(parse_embeddings(""), DataError);
  EXPECT_THROW(parse_embeddings("p1\t1\n"), DataError);
  EXPECT_THROW(parse_embeddings("#dim=1\np1\tnan\n"), DataError);
  EXPECT_THROW(parse_embeddings("#dim=1\np1\t1\np1\t2\n"), DataError);
}

TEST(Embeddings, MissingIdsAreListed) {
  const auto e = parse_embeddings("#dim=1\np1\t1\n");
  const std::vector<std::string> ids = {"p1", "q7"};
  try {
    align_embeddings(e, ids);
    FAIL() << "expected DataError";
  } catch (const DataError& err) {
    EXPECT_NE(std::string(err.what()).find("q7"), std::string::npos) << err.what();
  }
}
