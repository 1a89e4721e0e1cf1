#include "cppf/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>

#include "cppf/error.hpp"

namespace cppf {

namespace {

constexpr std::array<std::string_view, 5> kSpecials = {kPadToken, kUnkToken, kClsToken, kSepToken,
                                                       kMaskToken};

}  // namespace

Vocabulary::Vocabulary() {
  for (auto s : kSpecials) add(std::string(s));
}

int Vocabulary::add(std::string token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts,
                             const std::vector<std::string>& extra_words) {
  std::set<std::string> words;
  for (const auto& t : texts) {
    for (auto& w : word_tokens(t)) words.insert(std::move(w));
  }
  for (const auto& t : extra_words) {
    for (auto& w : word_tokens(t)) words.insert(std::move(w));
  }
  Vocabulary v;
  for (const auto& w : words) v.add(w);
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < kSpecials.size()) throw DataError("vocabulary too short: " + path.string());
  for (std::size_t i = 0; i < kSpecials.size(); ++i) {
    if (lines[i] != kSpecials[i]) {
      throw DataError("vocabulary " + path.string() + " must start with the special tokens");
    }
  }
  Vocabulary v;
  for (std::size_t i = kSpecials.size(); i < lines.size(); ++i) {
    if (v.contains(lines[i])) throw DataError("duplicate vocabulary entry '" + lines[i] + "'");
    v.add(lines[i]);
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_id() : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      flush();
      ++i;
      continue;
    }
    if (c == '[') {
      auto special = std::find_if(kSpecials.begin(), kSpecials.end(),
                                  [&](std::string_view s) { return text.substr(i).starts_with(s); });
      if (special != kSpecials.end()) {
        flush();
        out.emplace_back(*special);
        i += special->size();
        continue;
      }
    }
    if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
      ++i;
      continue;
    }
    word.push_back(static_cast<char>(c));
    ++i;
  }
  flush();
  return out;
}

Tokenizer::Tokenizer(Vocabulary vocab, std::size_t max_seq_len)
    : vocab_(std::move(vocab)), max_seq_len_(max_seq_len) {
  if (max_seq_len_ < 3) throw ConfigError("max_seq_len must be at least 3");
}

std::vector<int> Tokenizer::ids_for(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& w : word_tokens(text)) ids.push_back(vocab_.id(w));
  return ids;
}

TokenizedPrompt Tokenizer::frame(const std::vector<int>& body) const {
  TokenizedPrompt p;
  p.token_ids.reserve(body.size() + 2);
  p.token_ids.push_back(vocab_.cls_id());
  p.token_ids.insert(p.token_ids.end(), body.begin(), body.end());
  p.token_ids.push_back(vocab_.sep_id());
  p.attention_length = p.token_ids.size();
  const auto masks = std::count(p.token_ids.begin(), p.token_ids.end(), vocab_.mask_id());
  if (masks != 1) {
    throw DataError("prompt must contain exactly one [MASK], found " + std::to_string(masks));
  }
  p.mask_index = static_cast<std::size_t>(
      std::find(p.token_ids.begin(), p.token_ids.end(), vocab_.mask_id()) - p.token_ids.begin());
  return p;
}

TokenizedPrompt Tokenizer::encode(std::string_view text) const {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw DataError("cannot tokenize an empty prompt");
  }
  auto body = ids_for(text);
  if (body.size() + 2 > max_seq_len_) {
    throw DataError("prompt of " + std::to_string(body.size() + 2) +
                    " tokens exceeds max_seq_len " + std::to_string(max_seq_len_));
  }
  return frame(body);
}

TokenizedPrompt Tokenizer::encode(const PromptView& view) const {
  if (view.segments.empty()) return encode(std::string_view(view.text));
  std::vector<std::vector<int>> segs;
  for (const auto& s : view.segments) {
    segs.push_back(ids_for(std::string_view(view.text).substr(s.begin, s.length)));
  }
  std::size_t total = 2;
  for (const auto& s : segs) total += s.size();
  std::size_t dropped = 0;
  while (total > max_seq_len_ && segs.size() > 1) {
    total -= segs.back().size();
    segs.pop_back();
    ++dropped;
  }
  if (total > max_seq_len_) {
    throw DataError("target segment of " + view.target_id + " alone exceeds max_seq_len " +
                    std::to_string(max_seq_len_));
  }
  std::vector<int> body;
  for (const auto& s : segs) body.insert(body.end(), s.begin(), s.end());
  auto p = frame(body);
  p.dropped_demos = dropped;
  return p;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab_.token(ids[i]);
  }
  return out;
}

TokenizedPrompt Tokenizer::pad_to(TokenizedPrompt prompt, std::size_t length, int pad_id) {
  if (prompt.token_ids.size() < length) prompt.token_ids.resize(length, pad_id);
  return prompt;
}

int Tokenizer::single_token_id(std::string_view word) const {
  auto toks = word_tokens(word);
  if (toks.size() != 1) {
    throw DataError("verbalizer '" + std::string(word) + "' is not a single token");
  }
  if (!vocab_.contains(toks[0])) {
    throw DataError("verbalizer '" + std::string(word) + "' is not in the vocabulary");
  }
  return vocab_.id(toks[0]);
}

}  // namespace cppf
