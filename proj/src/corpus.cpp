#include "urgency/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_set>

#include "urgency/csv.hpp"
#include "urgency/error.hpp"

namespace urgency {

namespace {

constexpr std::string_view kRoles[] = {"text", "label", "post_id", "student_id",
                                       "timestamp"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Decodes one UTF-8 code point starting at text[i]; advances i. Invalid
// sequences decode to U+FFFD one byte at a time.
char32_t next_code_point(std::string_view text, std::size_t& i) {
  const auto lead = static_cast<unsigned char>(text[i]);
  int extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++i;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + extra >= text.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto cont = static_cast<unsigned char>(text[i + k]);
    if ((cont & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  i += extra + 1;
  return cp;
}

bool is_ascii_letter(char32_t cp) {
  return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

bool is_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

// Letters of the scripts most likely to appear in forum text. Symbols,
// punctuation and mathematical operators are not letters.
bool is_letter(char32_t cp) {
  if (is_ascii_letter(cp)) return true;
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;  // multiplication, division
  return (cp <= 0x024F) ||                      // Latin-1 and Latin Extended
         (cp >= 0x0370 && cp <= 0x03FF) ||      // Greek
         (cp >= 0x0400 && cp <= 0x052F) ||      // Cyrillic
         (cp >= 0x0590 && cp <= 0x05FF) ||      // Hebrew
         (cp >= 0x0600 && cp <= 0x06FF) ||      // Arabic
         (cp >= 0x0900 && cp <= 0x097F) ||      // Devanagari
         (cp >= 0x0E00 && cp <= 0x0E7F) ||      // Thai
         (cp >= 0x1E00 && cp <= 0x1FFF) ||      // Latin/Greek extended
         (cp >= 0x3040 && cp <= 0x30FF) ||      // Hiragana, Katakana
         (cp >= 0x4E00 && cp <= 0x9FFF) ||      // CJK ideographs
         (cp >= 0xAC00 && cp <= 0xD7AF);        // Hangul
}

bool is_url(std::string_view token) {
  return token.starts_with("http://") || token.starts_with("https://") ||
         token.starts_with("www.");
}

std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

UrgencyLabel UrgencyLabel::from_value(double value) {
  const double doubled = value * 2.0;
  const double rounded = std::round(doubled);
  if (!std::isfinite(value) || std::abs(doubled - rounded) > 1e-9 ||
      rounded < kMinHalfSteps || rounded > kMaxHalfSteps) {
    throw DataError("invalid urgency label " + std::to_string(value) +
                    ": must lie in [1, 7] in steps of 0.5");
  }
  return UrgencyLabel(static_cast<int>(rounded));
}

UrgencyLabel UrgencyLabel::from_half_steps(int half_steps) {
  if (half_steps < kMinHalfSteps || half_steps > kMaxHalfSteps) {
    throw DataError("invalid urgency label half-step count " +
                    std::to_string(half_steps));
  }
  return UrgencyLabel(half_steps);
}

std::optional<UrgencyLabel> UrgencyLabel::parse(std::string_view text) {
  const std::string trimmed = trim(text);
  if (trimmed.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = trimmed.data();
  const char* last = first + trimmed.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  try {
    return from_value(value);
  } catch (const DataError&) {
    return std::nullopt;
  }
}

std::string UrgencyLabel::to_string() const {
  if (is_whole()) return std::to_string(half_steps_ / 2);
  return std::to_string(half_steps_ / 2) + ".5";
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
  if (name == "upenn") return CorpusFormat::kUpenn;
  if (name == "stanford") return CorpusFormat::kStanford;
  return std::nullopt;
}

std::string_view to_string(CorpusFormat format) {
  return format == CorpusFormat::kUpenn ? "upenn" : "stanford";
}

ColumnMap default_column_map(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::kUpenn:
      return {{"post_id", "post_id"},
              {"student_id", "student_id"},
              {"timestamp", "timestamp"},
              {"text", "text"},
              {"label", "label"}};
    case CorpusFormat::kStanford:
      return {{"post_id", "forum_post_id"},
              {"student_id", "forum_uid"},
              {"timestamp", "created_at"},
              {"text", "Text"},
              {"label", "Urgency(1-7)"}};
  }
  return {};
}

ColumnMap parse_column_map(std::span<const std::string> pairs) {
  ColumnMap map;
  for (const auto& pair : pairs) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == pair.size()) {
      throw ConfigError("column map entry '" + pair + "' is not role=name");
    }
    const std::string role = pair.substr(0, eq);
    if (std::find(std::begin(kRoles), std::end(kRoles), role) == std::end(kRoles)) {
      throw ConfigError("unknown column role '" + role +
                        "' (expected text, label, post_id, student_id, timestamp)");
    }
    map[role] = pair.substr(eq + 1);
  }
  return map;
}

namespace {

struct LoadedRow {
  RawPost post;
  std::optional<UrgencyLabel> label;
};

std::vector<LoadedRow> load_rows(const std::filesystem::path& path, CorpusFormat format,
                                 const ColumnMap& overrides, bool labeled) {
  ColumnMap columns = default_column_map(format);
  for (const auto& [role, name] : overrides) {
    if (std::find(std::begin(kRoles), std::end(kRoles), role) == std::end(kRoles)) {
      throw ConfigError("unknown column role '" + role + "'");
    }
    columns[role] = name;
  }

  const csv::Table table = csv::read_file(path);

  auto resolve = [&](const std::string& role, bool required) -> std::optional<std::size_t> {
    const auto& name = columns.at(role);
    auto index = table.column(name);
    if (!index && required) {
      throw ConfigError(path.string() + ": required column '" + name +
                        "' for role '" + role +
                        "' not found; use --column-map " + role + "=<header>");
    }
    return index;
  };
  const auto text_col = resolve("text", true);
  const auto label_col = labeled ? resolve("label", true) : std::optional<std::size_t>{};
  const auto post_col = resolve("post_id", false);
  const auto student_col = resolve("student_id", false);
  const auto time_col = resolve("timestamp", false);

  if (!student_col) {
    spdlog::warn("{}: no student id column '{}'; grouping degrades to post level",
                 path.string(), columns.at("student_id"));
  }

  std::vector<LoadedRow> posts;
  posts.reserve(table.rows.size());
  std::vector<std::string> bad_labels;
  std::vector<std::string> empty_texts;
  std::unordered_set<std::string> seen_ids;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string row_ref = "row " + std::to_string(r + 1) + " (line " +
                                std::to_string(table.row_lines[r]) + ")";
    RawPost post;
    post.post_id = post_col ? trim(row[*post_col]) : std::to_string(r);
    if (post.post_id.empty()) post.post_id = std::to_string(r);
    post.student_id = student_col ? trim(row[*student_col]) : post.post_id;
    if (post.student_id.empty()) post.student_id = post.post_id;
    post.timestamp = time_col ? trim(row[*time_col]) : std::string();
    post.text = row[*text_col];

    if (!seen_ids.insert(post.post_id).second) {
      throw DataError(path.string() + ": duplicate post_id '" + post.post_id +
                      "' at " + row_ref);
    }
    if (trim(post.text).empty()) {
      empty_texts.push_back(row_ref);
      continue;
    }
    if (!labeled) {
      posts.push_back(LoadedRow{std::move(post), std::nullopt});
      continue;
    }
    const auto label = UrgencyLabel::parse(row[*label_col]);
    if (!label) {
      bad_labels.push_back(row_ref + " label '" + row[*label_col] + "'");
      continue;
    }
    posts.push_back(LoadedRow{std::move(post), *label});
  }

  auto join_list = [](const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size() && i < 20; ++i) {
      out += (i ? "; " : "") + items[i];
    }
    if (items.size() > 20) out += "; ... (" + std::to_string(items.size()) + " total)";
    return out;
  };
  if (!bad_labels.empty()) {
    throw DataError(path.string() + ": labels outside [1, 7] or not a multiple of 0.5: " +
                    join_list(bad_labels));
  }
  if (!empty_texts.empty()) {
    throw DataError(path.string() + ": empty post text: " + join_list(empty_texts));
  }
  return posts;
}

}  // namespace

std::vector<LabeledPost> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                     const ColumnMap& overrides) {
  auto rows = load_rows(path, format, overrides, true);
  if (rows.empty()) throw DataError(path.string() + ": corpus has no data rows");
  std::vector<LabeledPost> posts;
  posts.reserve(rows.size());
  for (auto& r : rows) posts.push_back(LabeledPost{std::move(r.post), *r.label});
  return posts;
}

std::vector<RawPost> load_unlabeled(const std::filesystem::path& path, CorpusFormat format,
                                    const ColumnMap& overrides) {
  auto rows = load_rows(path, format, overrides, false);
  std::vector<RawPost> posts;
  posts.reserve(rows.size());
  for (auto& r : rows) posts.push_back(std::move(r.post));
  return posts;
}

std::string corpus_to_csv(std::span<const LabeledPost> posts) {
  std::string out = csv::format_row({"post_id", "student_id", "timestamp", "text", "label"});
  for (const auto& p : posts) {
    out += csv::format_row({p.post.post_id, p.post.student_id, p.post.timestamp,
                            p.post.text, p.label.to_string()});
  }
  return out;
}

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::kNonEnglish: return "non-english-heuristic";
    case DropReason::kSymbolsOnly: return "symbols-only";
    case DropReason::kMathOnly: return "math-only";
    case DropReason::kLinksOnly: return "links-only";
  }
  return "unknown";
}

std::optional<DropReason> classify_post(std::string_view text) {
  const auto tokens = whitespace_tokens(text);
  if (!tokens.empty() && std::all_of(tokens.begin(), tokens.end(), is_url)) {
    return DropReason::kLinksOnly;
  }

  std::size_t letters = 0;
  std::size_t ascii_letters = 0;
  std::size_t digits = 0;
  std::size_t letter_run = 0;
  std::size_t longest_letter_run = 0;
  for (std::size_t i = 0; i < text.size();) {
    const char32_t cp = next_code_point(text, i);
    if (is_letter(cp)) {
      ++letters;
      if (is_ascii_letter(cp)) ++ascii_letters;
      longest_letter_run = std::max(longest_letter_run, ++letter_run);
    } else {
      letter_run = 0;
      if (is_digit(cp)) ++digits;
    }
  }

  if (letters == 0 && digits == 0) return DropReason::kSymbolsOnly;
  if (longest_letter_run < 2 && digits > 0) return DropReason::kMathOnly;
  if (letters > 0 && 2 * ascii_letters < letters) return DropReason::kNonEnglish;
  return std::nullopt;
}

FilterResult filter_posts(std::span<const RawPost> posts) {
  FilterResult result;
  for (const auto& post : posts) {
    if (auto reason = classify_post(post.text)) {
      result.dropped.emplace_back(post, *reason);
    } else {
      result.kept.push_back(post);
    }
  }
  return result;
}

CorpusStats compute_stats(std::span<const LabeledPost> posts,
                          std::span<const std::size_t> token_counts) {
  if (posts.empty()) throw DataError("cannot compute statistics of an empty corpus");
  if (posts.size() != token_counts.size()) {
    throw DataError("token counts are not aligned with posts");
  }
  CorpusStats stats;
  stats.n_posts = posts.size();
  std::set<std::string_view> students;
  for (const auto& p : posts) {
    students.insert(p.post.student_id);
    ++stats.label_histogram[p.label];
  }
  stats.n_students = students.size();

  const auto [min_it, max_it] = std::minmax_element(token_counts.begin(), token_counts.end());
  stats.word_count_min = *min_it;
  stats.word_count_max = *max_it;
  double sum = 0.0;
  for (auto c : token_counts) sum += static_cast<double>(c);
  const double n = static_cast<double>(token_counts.size());
  stats.word_count_mean = sum / n;
  double sq = 0.0;
  for (auto c : token_counts) {
    const double d = static_cast<double>(c) - stats.word_count_mean;
    sq += d * d;
  }
  stats.word_count_stdev = std::sqrt(sq / n);
  return stats;
}

}  // namespace urgency
