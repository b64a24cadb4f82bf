#include "urgency/preprocess.hpp"

#include <algorithm>
#include <array>

namespace urgency {

namespace {

constexpr auto kStopwords = [] {
  std::array<std::string_view, 174> words = {
      "a",          "about",    "above",   "after",      "again",    "against",
      "ain",        "all",      "also",    "although",   "am",       "among",
      "an",         "and",      "any",     "are",        "aren",     "as",
      "at",         "be",       "because", "been",       "before",   "being",
      "below",      "between",  "both",    "but",        "by",       "can",
      "could",      "couldn",   "d",       "did",        "didn",     "do",
      "does",       "doesn",    "doing",   "don",        "down",     "during",
      "each",       "either",   "ever",    "every",      "few",      "for",
      "from",       "further",  "had",     "hadn",       "has",      "hasn",
      "have",       "haven",    "having",  "he",         "her",      "here",
      "hers",       "herself",  "him",     "himself",    "his",      "how",
      "i",          "if",       "in",      "into",       "is",       "isn",
      "it",         "its",      "itself",  "just",       "ll",       "m",
      "ma",         "may",      "me",      "might",      "mightn",   "more",
      "most",       "must",     "mustn",   "my",         "myself",   "needn",
      "neither",    "no",       "nor",     "not",        "now",      "o",
      "of",         "off",      "on",      "once",       "only",     "or",
      "other",      "our",      "ours",    "ourselves",  "out",      "over",
      "own",        "re",       "s",       "same",       "shall",    "shan",
      "she",        "should",   "shouldn", "since",      "so",       "some",
      "such",       "t",        "than",    "that",       "the",      "their",
      "theirs",     "them",     "themselves", "then",    "there",    "these",
      "they",       "this",     "those",   "though",     "through",  "to",
      "too",        "under",    "until",   "up",         "upon",     "us",
      "ve",         "very",     "was",     "wasn",       "we",       "were",
      "weren",      "whether",  "what",    "when",       "where",    "which",
      "while",      "who",      "whom",    "why",        "will",     "with",
      "within",     "without",  "won",     "would",      "wouldn",   "y",
      "yet",        "you",      "your",    "yours",      "yourself", "yourselves",
  };
  std::sort(words.begin(), words.end());
  return words;
}();

bool is_ascii_alnum_lower(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

}  // namespace

std::string clean_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (is_ascii_alnum_lower(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::span<const std::string_view> stopwords() { return kStopwords; }

bool is_stopword(std::string_view token) {
  return std::binary_search(kStopwords.begin(), kStopwords.end(), token);
}

std::vector<std::string> remove_stopwords(std::vector<std::string> tokens) {
  std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
  return tokens;
}

std::vector<std::string> preprocess_text(std::string_view text) {
  const std::string cleaned = clean_text(text);
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < cleaned.size()) {
    std::size_t end = cleaned.find(' ', start);
    if (end == std::string::npos) end = cleaned.size();
    tokens.emplace_back(cleaned.substr(start, end - start));
    start = end + 1;
  }
  tokens = remove_stopwords(std::move(tokens));
  for (auto& t : tokens) t = stem_token(t);
  return tokens;
}

TokenizedPost preprocess_post(const RawPost& post) {
  return TokenizedPost{post.post_id, preprocess_text(post.text)};
}

std::vector<TokenizedPost> preprocess_corpus(std::span<const LabeledPost> posts) {
  std::vector<TokenizedPost> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(preprocess_post(p.post));
  return out;
}

}  // namespace urgency
