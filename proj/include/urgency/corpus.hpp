#ifndef URGENCY_CORPUS_HPP_
#define URGENCY_CORPUS_HPP_

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace urgency {

// Ordinal urgency on the 1..7 scale in half steps. Stored as the count of
// half steps so that equality and ordering are exact.
class UrgencyLabel {
 public:
  static constexpr int kMinHalfSteps = 2;   // 1.0
  static constexpr int kMaxHalfSteps = 14;  // 7.0

  // Throws DataError if the value is outside [1, 7] or not a multiple of 0.5.
  static UrgencyLabel from_value(double value);
  static UrgencyLabel from_half_steps(int half_steps);
  // Parses a decimal string such as "5", "4.5" or "3.0".
  static std::optional<UrgencyLabel> parse(std::string_view text);

  double value() const { return half_steps_ / 2.0; }
  int half_steps() const { return half_steps_; }
  bool is_whole() const { return half_steps_ % 2 == 0; }
  std::string to_string() const;

  auto operator<=>(const UrgencyLabel&) const = default;

 private:
  explicit UrgencyLabel(int half_steps) : half_steps_(half_steps) {}
  int half_steps_;
};

struct RawPost {
  std::string post_id;
  std::string student_id;
  std::string timestamp;
  std::string text;
};

struct LabeledPost {
  RawPost post;
  UrgencyLabel label;
};

enum class CorpusFormat { kUpenn, kStanford };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name);
std::string_view to_string(CorpusFormat format);

// Column roles: text, label, post_id, student_id, timestamp.
using ColumnMap = std::map<std::string, std::string>;

ColumnMap default_column_map(CorpusFormat format);
// Parses "role=name" pairs as given on the command line.
ColumnMap parse_column_map(std::span<const std::string> pairs);

std::vector<LabeledPost> load_corpus(const std::filesystem::path& path,
                                     CorpusFormat format,
                                     const ColumnMap& overrides = {});

// Posts to be scored: the label column is not required and is ignored. An
// input without data rows yields an empty list.
std::vector<RawPost> load_unlabeled(const std::filesystem::path& path, CorpusFormat format,
                                    const ColumnMap& overrides = {});

// Writes posts in the default UPenn layout.
std::string corpus_to_csv(std::span<const LabeledPost> posts);

enum class DropReason { kNonEnglish, kSymbolsOnly, kMathOnly, kLinksOnly };

std::string_view to_string(DropReason reason);

struct FilterResult {
  std::vector<RawPost> kept;
  std::vector<std::pair<RawPost, DropReason>> dropped;
};

// Reason for dropping a single post, if any.
std::optional<DropReason> classify_post(std::string_view text);
FilterResult filter_posts(std::span<const RawPost> posts);

struct CorpusStats {
  std::size_t n_posts = 0;
  std::size_t n_students = 0;
  std::map<UrgencyLabel, std::size_t> label_histogram;
  double word_count_mean = 0.0;
  double word_count_stdev = 0.0;
  std::size_t word_count_min = 0;
  std::size_t word_count_max = 0;
};

CorpusStats compute_stats(std::span<const LabeledPost> posts,
                          std::span<const std::size_t> token_counts);

}  // namespace urgency

#endif  // URGENCY_CORPUS_HPP_
