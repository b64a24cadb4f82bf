#ifndef URGENCY_PREPROCESS_HPP_
#define URGENCY_PREPROCESS_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urgency/corpus.hpp"

namespace urgency {

struct TokenizedPost {
  std::string post_id;
  std::vector<std::string> tokens;  // each matches [a-z0-9]+
};

// Lowercases, replaces every byte other than [a-z0-9] with a space, collapses
// whitespace runs and trims. Non-ASCII letters are not English letters and
// become spaces.
std::string clean_text(std::string_view text);

// Version tag of the embedded stopword list.
inline constexpr std::string_view kStopwordListVersion = "en-174-v1";

// The 174 embedded English stopwords, sorted.
std::span<const std::string_view> stopwords();
bool is_stopword(std::string_view token);
std::vector<std::string> remove_stopwords(std::vector<std::string> tokens);

// Classic Porter (1980) stemmer, steps 1a through 5b. Expects [a-z0-9]+.
std::string stem_token(std::string_view token);

// clean_text -> split on spaces -> remove_stopwords -> stem.
std::vector<std::string> preprocess_text(std::string_view text);
TokenizedPost preprocess_post(const RawPost& post);
std::vector<TokenizedPost> preprocess_corpus(std::span<const LabeledPost> posts);

}  // namespace urgency

#endif  // URGENCY_PREPROCESS_HPP_
