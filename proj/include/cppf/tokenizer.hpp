#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cppf/prompt.hpp"

namespace cppf {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

/// Token <-> id table. Ids 0..4 are [PAD], [UNK], [CLS], [SEP], [MASK].
class Vocabulary {
 public:
  Vocabulary();

  // Specials plus every word of `texts` (and `extra_words`), sorted.
  static Vocabulary build(const std::vector<std::string>& texts,
                          const std::vector<std::string>& extra_words = {});
  // Token per line.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int id(std::string_view token) const;  // [UNK] id for unknown tokens
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int pad_id() const { return 0; }
  int unk_id() const { return 1; }
  int cls_id() const { return 2; }
  int sep_id() const { return 3; }
  int mask_id() const { return 4; }

 private:
  int add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Whitespace split, then punctuation split off as single-character tokens.
// Bracketed specials such as [MASK] stay whole.
std::vector<std::string> word_tokens(std::string_view text);

struct TokenizedPrompt {
  std::vector<int> token_ids;
  std::size_t mask_index = 0;
  std::size_t attention_length = 0;  // ids past this are [PAD]
  std::size_t dropped_demos = 0;
};

class Tokenizer {
 public:
  Tokenizer(Vocabulary vocab, std::size_t max_seq_len);

  /// [CLS] tokens [SEP]. The text must hold exactly one [MASK] and fit.
  TokenizedPrompt encode(std::string_view text) const;

  /// Like encode, but an overlong prompt loses whole demonstrations from the
  /// right until it fits. The target segment is never truncated.
  TokenizedPrompt encode(const PromptView& view) const;

  std::string decode(const std::vector<int>& ids) const;
  // Appends [PAD] up to `length`; attention_length is unchanged.
  static TokenizedPrompt pad_to(TokenizedPrompt prompt, std::size_t length, int pad_id);

  const Vocabulary& vocab() const { return vocab_; }
  std::size_t max_seq_len() const { return max_seq_len_; }

  // Vocabulary id of a single-token word; throws if it splits or is unknown.
  int single_token_id(std::string_view word) const;

 private:
  std::vector<int> ids_for(std::string_view text) const;
  TokenizedPrompt frame(const std::vector<int>& body) const;

  Vocabulary vocab_;
  std::size_t max_seq_len_;
};

}  // namespace cppf
