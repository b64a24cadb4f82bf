// Porter stemmer, following the rule tables of the original 1980 algorithm.
// Each step applies at most one rule: the first rule whose suffix matches is
// selected, and if its condition fails no later rule in that step is tried.

#include <algorithm>
#include <string>
#include <string_view>

#include "urgency/preprocess.hpp"

namespace urgency {

namespace {

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
};

bool is_vowel_letter(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// y is a consonant at the start of a word or after a vowel.
bool is_consonant(std::string_view w, std::size_t i) {
  if (is_vowel_letter(w[i])) return false;
  if (w[i] == 'y') return i == 0 || !is_consonant(w, i - 1);
  return true;
}

// m in [C](VC){m}[V]
int measure(std::string_view stem) {
  int m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < stem.size(); ++i) {
    const bool consonant = is_consonant(stem, i);
    if (consonant && prev_vowel) ++m;
    prev_vowel = !consonant;
  }
  return m;
}

bool contains_vowel(std::string_view stem) {
  for (std::size_t i = 0; i < stem.size(); ++i) {
    if (!is_consonant(stem, i)) return true;
  }
  return false;
}

bool ends_double_consonant(std::string_view w) {
  const std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: stem ends consonant-vowel-consonant, last consonant not w, x or y.
bool ends_cvc(std::string_view w) {
  const std::size_t n = w.size();
  return n >= 3 && is_consonant(w, n - 3) && !is_consonant(w, n - 2) &&
         is_consonant(w, n - 1) && w[n - 1] != 'w' && w[n - 1] != 'x' &&
         w[n - 1] != 'y';
}

template <class Condition>
void apply_rules(std::string& w, std::initializer_list<Rule> rules, Condition condition) {
  for (const Rule& rule : rules) {
    if (!w.ends_with(rule.suffix)) continue;
    const std::string_view stem(w.data(), w.size() - rule.suffix.size());
    if (condition(stem)) {
      w.resize(stem.size());
      w += rule.replacement;
    }
    return;
  }
}

void step1a(std::string& w) {
  apply_rules(w, {{"sses", "ss"}, {"ies", "i"}, {"ss", "ss"}, {"s", ""}},
              [](std::string_view) { return true; });
}

void step1b(std::string& w) {
  if (w.ends_with("eed")) {
    if (measure(std::string_view(w).substr(0, w.size() - 3)) > 0) w.pop_back();
    return;
  }
  bool stripped = false;
  for (std::string_view suffix : {std::string_view("ed"), std::string_view("ing")}) {
    if (w.ends_with(suffix) &&
        contains_vowel(std::string_view(w).substr(0, w.size() - suffix.size()))) {
      w.resize(w.size() - suffix.size());
      stripped = true;
      break;
    }
  }
  if (!stripped) return;

  if (w.ends_with("at") || w.ends_with("bl") || w.ends_with("iz")) {
    w += 'e';
  } else if (ends_double_consonant(w)) {
    const char last = w.back();
    if (last != 'l' && last != 's' && last != 'z') w.pop_back();
  } else if (measure(w) == 1 && ends_cvc(w)) {
    w += 'e';
  }
}

void step1c(std::string& w) {
  if (w.ends_with("y") && contains_vowel(std::string_view(w).substr(0, w.size() - 1))) {
    w.back() = 'i';
  }
}

void step2(std::string& w) {
  apply_rules(w,
              {{"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},
               {"anci", "ance"},   {"izer", "ize"},    {"abli", "able"},
               {"alli", "al"},     {"entli", "ent"},   {"eli", "e"},
               {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
               {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"},
               {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},
               {"iviti", "ive"},   {"biliti", "ble"}},
              [](std::string_view stem) { return measure(stem) > 0; });
}

void step3(std::string& w) {
  apply_rules(w,
              {{"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
               {"ical", "ic"}, {"ful", ""}, {"ness", ""}},
              [](std::string_view stem) { return measure(stem) > 0; });
}

void step4(std::string& w) {
  for (std::string_view suffix :
       {"al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
        "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize"}) {
    if (!w.ends_with(suffix)) continue;
    const std::string_view stem(w.data(), w.size() - suffix.size());
    bool ok = measure(stem) > 1;
    if (suffix == "ion") ok = ok && !stem.empty() && (stem.back() == 's' || stem.back() == 't');
    if (ok) w.resize(stem.size());
    return;
  }
}

void step5a(std::string& w) {
  if (!w.ends_with("e")) return;
  const std::string_view stem(w.data(), w.size() - 1);
  const int m = measure(stem);
  if (m > 1 || (m == 1 && !ends_cvc(stem))) w.pop_back();
}

void step5b(std::string& w) {
  if (w.ends_with("ll") && measure(w) > 1) w.pop_back();
}

}  // namespace

std::string stem_token(std::string_view token) {
  std::string w(token);
  if (w.empty() ||
      std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return w;
  }
  step1a(w);
  step1b(w);
  step1c(w);
  step2(w);
  step3(w);
  step4(w);
  step5a(w);
  step5b(w);
  return w;
}

}  // namespace urgency
