#ifndef URGENCY_TESTS_TEST_SUPPORT_HPP_
#define URGENCY_TESTS_TEST_SUPPORT_HPP_

#include <stdlib.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "urgency/corpus.hpp"
#include "urgency/featurize.hpp"
#include "urgency/random.hpp"

namespace urgency::testing {

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "urgency-test-XXXXXX").string();
    if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline SparseFeatureMatrix dense_matrix(const std::vector<std::vector<double>>& rows) {
  SparseFeatureMatrix m(rows.empty() ? 0 : rows.front().size());
  for (const auto& r : rows) m.append_dense_row(r);
  return m;
}

inline std::vector<std::vector<double>> random_dense(std::size_t n, std::size_t d, Rng& rng,
                                                     double lo = -1.0, double hi = 1.0) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    for (auto& v : r) v = rng.uniform(lo, hi);
  }
  return rows;
}

// Labeled posts whose wording drifts toward urgent vocabulary as the label
// rises; label frequencies are skewed toward low urgency.
inline std::vector<LabeledPost> synthetic_corpus(std::size_t n_posts, std::size_t n_students,
                                                 std::uint64_t seed) {
  static const std::vector<std::string> calm = {
      "course", "lecture", "video",  "week",   "topic",    "discussion", "thanks",
      "interesting", "example", "idea", "material", "learn", "class", "reading",
      "people", "world", "history", "music", "art", "enjoyed", "hello", "everyone"};
  static const std::vector<std::string> urgent = {
      "deadline", "error", "broken", "grade", "submit", "quiz", "missing", "help",
      "problem", "cannot", "access", "certificate", "wrong", "score", "urgent", "fix"};
  static const std::vector<double> weights = {1276, 1220, 334, 373, 250, 48, 2};
  double total = 0.0;
  for (double w : weights) total += w;

  Rng rng(seed);
  std::vector<LabeledPost> posts;
  for (std::size_t i = 0; i < n_posts; ++i) {
    double u = rng.uniform() * total;
    int label = 1;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (u < weights[k]) {
        label = static_cast<int>(k) + 1;
        break;
      }
      u -= weights[k];
    }
    const std::size_t n_words = 5 + rng.below(40);
    std::string text = "The";
    for (std::size_t w = 0; w < n_words; ++w) {
      const bool hot = rng.uniform() < (label - 1) / 8.0;
      const auto& pool = hot ? urgent : calm;
      text += " " + pool[rng.below(pool.size())];
    }
    text += (label >= 5 ? "!!" : ".");
    RawPost post{std::to_string(1000 + i), "s" + std::to_string(rng.below(n_students)),
                 "2020-01-01T00:00:00Z", text};
    posts.push_back({post, UrgencyLabel::from_value(label)});
  }
  return posts;
}

}  // namespace urgency::testing

#endif  // URGENCY_TESTS_TEST_SUPPORT_HPP_
