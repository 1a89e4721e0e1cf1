#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cppf/rng.hpp"

namespace cppf {

/// Word -> synonym table used by synonym replacement and random insertion.
class SynonymLexicon {
 public:
  SynonymLexicon() = default;

  // One entry per line: `word syn1 syn2 ...`; '#' starts a comment line.
  static SynonymLexicon load(const std::filesystem::path& path);

  void add(const std::string& word, const std::vector<std::string>& synonyms);
  // Synonyms of `word`, excluding the word itself; empty if unknown.
  std::vector<std::string> synonyms(std::string_view word) const;
  bool empty() const { return table_.empty(); }

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> table_;
};

bool is_stop_word(std::string_view word);

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words);

// Replaces up to n distinct non-stop-word positions with a random synonym.
std::string eda_synonym_replacement(std::string_view text, std::size_t n,
                                    const SynonymLexicon& lexicon, Rng& rng);
// n times: inserts a synonym of a random non-stop word at a random position.
std::string eda_random_insertion(std::string_view text, std::size_t n,
                                 const SynonymLexicon& lexicon, Rng& rng);
// n random position swaps; the word multiset is preserved.
std::string eda_random_swap(std::string_view text, std::size_t n, Rng& rng);
// Drops each word with probability p; keeps one random word if all drop.
std::string eda_random_deletion(std::string_view text, double p, Rng& rng);

struct EdaParams {
  std::size_t sr_n = 1;
  std::size_t ri_n = 1;
  std::size_t rs_n = 1;
  double rd_p = 0.1;

  // n = max(1, floor(alpha * words)) for the count-based operations, p = alpha.
  static EdaParams from_alpha(std::string_view text, double alpha = 0.1);
};

enum class EdaOp { kSynonymReplacement, kRandomInsertion, kRandomSwap, kRandomDeletion };

struct EdaResult {
  std::string text;
  EdaOp op;
};

// Applies one uniformly chosen operation.
EdaResult eda_all(std::string_view text, const EdaParams& params, const SynonymLexicon& lexicon,
                  Rng& rng);

}  // namespace cppf
