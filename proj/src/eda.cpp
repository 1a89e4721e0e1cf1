#include "cppf/eda.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "cppf/error.hpp"

namespace cppf {

namespace {

// The stop-word list of the original EDA implementation.
const std::set<std::string, std::less<>>& stop_words() {
  static const std::set<std::string, std::less<>> words = {
      "i",       "me",      "my",       "myself",   "we",        "our",     "ours",
      "ourselves", "you",   "your",     "yours",    "yourself",  "yourselves", "he",
      "him",     "his",     "himself",  "she",      "her",       "hers",    "herself",
      "it",      "its",     "itself",   "they",     "them",      "their",   "theirs",
      "themselves", "what", "which",    "who",      "whom",      "this",    "that",
      "these",   "those",   "am",       "is",       "are",       "was",     "were",
      "be",      "been",    "being",    "have",     "has",       "had",     "having",
      "do",      "does",    "did",      "doing",    "a",         "an",      "the",
      "and",     "but",     "if",       "or",       "because",   "as",      "until",
      "while",   "of",      "at",       "by",       "for",       "with",    "about",
      "against", "between", "into",     "through",  "during",    "before",  "after",
      "above",   "below",   "to",       "from",     "up",        "down",    "in",
      "out",     "on",      "off",      "over",     "under",     "again",   "further",
      "then",    "once",    "here",     "there",    "when",      "where",   "why",
      "how",     "all",     "any",      "both",     "each",      "few",     "more",
      "most",    "other",   "some",     "such",     "no",        "nor",     "not",
      "only",    "own",     "same",     "so",       "than",      "too",     "very",
      "s",       "t",       "can",      "will",     "just",      "don",     "should",
      "now",     ""};
  return words;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool replaceable(const std::string& word, const SynonymLexicon& lexicon) {
  return !is_stop_word(word) && !lexicon.synonyms(word).empty();
}

}  // namespace

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  SynonymLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto words = split_words(line);
    if (words.size() < 2) continue;
    lex.add(words[0], std::vector<std::string>(words.begin() + 1, words.end()));
  }
  return lex;
}

void SynonymLexicon::add(const std::string& word, const std::vector<std::string>& synonyms) {
  auto& list = table_[word];
  for (const auto& s : synonyms) {
    if (s != word && std::find(list.begin(), list.end(), s) == list.end()) list.push_back(s);
  }
}

std::vector<std::string> SynonymLexicon::synonyms(std::string_view word) const {
  auto it = table_.find(word);
  if (it == table_.end()) it = table_.find(lower(word));
  return it == table_.end() ? std::vector<std::string>{} : it->second;
}

bool is_stop_word(std::string_view word) { return stop_words().contains(lower(word)); }

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(std::move(w));
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::string eda_synonym_replacement(std::string_view text, std::size_t n,
                                    const SynonymLexicon& lexicon, Rng& rng) {
  auto words = split_words(text);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (replaceable(words[i], lexicon)) candidates.push_back(i);
  }
  rng.shuffle(candidates);
  const auto count = std::min(n, candidates.size());
  for (std::size_t k = 0; k < count; ++k) {
    auto& w = words[candidates[k]];
    auto syns = lexicon.synonyms(w);
    w = syns[rng.uniform_index(syns.size())];
  }
  return join_words(words);
}

std::string eda_random_insertion(std::string_view text, std::size_t n,
                                 const SynonymLexicon& lexicon, Rng& rng) {
  auto words = split_words(text);
  if (words.empty()) return std::string(text);
  for (std::size_t k = 0; k < n; ++k) {
    for (int attempt = 0; attempt < 10; ++attempt) {
      const auto& w = words[rng.uniform_index(words.size())];
      if (!replaceable(w, lexicon)) continue;
      auto syns = lexicon.synonyms(w);
      auto syn = syns[rng.uniform_index(syns.size())];
      const auto pos = rng.uniform_index(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), std::move(syn));
      break;
    }
  }
  return join_words(words);
}

std::string eda_random_swap(std::string_view text, std::size_t n, Rng& rng) {
  auto words = split_words(text);
  if (words.size() < 2) return join_words(words);
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = rng.uniform_index(words.size());
    auto j = rng.uniform_index(words.size());
    for (int retry = 0; j == i && retry < 3; ++retry) j = rng.uniform_index(words.size());
    std::swap(words[i], words[j]);
  }
  return join_words(words);
}

std::string eda_random_deletion(std::string_view text, double p, Rng& rng) {
  auto words = split_words(text);
  if (words.size() <= 1) return join_words(words);
  std::vector<std::string> kept;
  for (auto& w : words) {
    if (rng.uniform_real() >= p) kept.push_back(w);
  }
  if (kept.empty()) return words[rng.uniform_index(words.size())];
  return join_words(kept);
}

EdaParams EdaParams::from_alpha(std::string_view text, double alpha) {
  const auto len = split_words(text).size();
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(alpha * static_cast<double>(len)));
  return {n, n, n, alpha};
}

EdaResult eda_all(std::string_view text, const EdaParams& params, const SynonymLexicon& lexicon,
                  Rng& rng) {
  const auto op = static_cast<EdaOp>(rng.uniform_index(4));
  switch (op) {
    case EdaOp::kSynonymReplacement:
      return {eda_synonym_replacement(text, params.sr_n, lexicon, rng), op};
    case EdaOp::kRandomInsertion:
      return {eda_random_insertion(text, params.ri_n, lexicon, rng), op};
    case EdaOp::kRandomSwap:
      return {eda_random_swap(text, params.rs_n, rng), op};
    case EdaOp::kRandomDeletion:
      return {eda_random_deletion(text, params.rd_p, rng), op};
  }
  return {std::string(text), op};
}

}  // namespace cppf
