#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cppf/dataset.hpp"
#include "cppf/llm_client.hpp"
#include "cppf/rng.hpp"

namespace cppf {

enum class AugMethod {
  kParaphraseLlm,
  kBtAr,
  kBtFr,
  kBtDe,
  kBtZh,
  kBtHi,
  kEdaSr,
  kEdaRi,
  kEdaRs,
  kEdaRd,
  kEdaAll,
};

std::string_view to_string(AugMethod m);
AugMethod parse_aug_method(std::string_view s);

struct AugmentationRecord {
  std::string original_id;
  std::string original_text;
  std::string augmented_text;
  AugMethod method = AugMethod::kParaphraseLlm;
  std::map<std::string, std::string> meta;

  friend bool operator==(const AugmentationRecord&, const AugmentationRecord&) = default;
};

std::string augmentation_record_to_json(const AugmentationRecord& r);
AugmentationRecord augmentation_record_from_json(const std::string& line);
void save_augmentations(const std::filesystem::path& path,
                        const std::vector<AugmentationRecord>& records);
std::vector<AugmentationRecord> load_augmentations(const std::filesystem::path& path);

inline constexpr int kDemoTemplateCount = 6;
inline constexpr int kInstructionTemplateCount = 5;
inline constexpr std::size_t kMaxParaphraseDemos = 15;

// The instruction sentence for template id 1..5.
const std::string& instruction_template(int id);

// One demonstration rendered in template `id` (1..6), paraphrase filled in.
std::string render_demo_pair(int id, const std::string& original, const std::string& paraphrase);
// The query line(s) with the paraphrase slot left open.
std::string render_open_query(int id, const std::string& query);

using TextPair = std::pair<std::string, std::string>;  // (original, paraphrase)

/// Few-shot paraphrasing prompt: the optional instruction line, one rendered
/// demonstration per pair, then the open query; lines joined by '\n'.
std::string build_paraphrase_prompt(const std::vector<TextPair>& demo_pairs,
                                    const std::string& query, int demo_template_id,
                                    std::optional<int> instruction_template_id = std::nullopt);

// First line of a raw completion, cut at any echoed template keyword, trimmed.
std::string clean_completion(const std::string& raw);

// Cleaned paraphrase for `prompt`; throws Error on an empty result.
std::string paraphrase(LlmClient& client, const std::string& prompt, int max_attempts = 3);

struct DemoPairRecord {
  std::string task;
  std::string label;
  std::string original;
  std::string paraphrase;
};

std::vector<DemoPairRecord> load_demo_pairs(const std::filesystem::path& path);
void save_demo_pairs(const std::filesystem::path& path, const std::vector<DemoPairRecord>& pairs);

// Same-task, same-label pairs whose original differs from `query`, in file order.
std::vector<TextPair> select_demo_pairs(const std::vector<DemoPairRecord>& pool,
                                        const std::string& task, const std::string& label,
                                        const std::string& query,
                                        std::size_t max_pairs = kMaxParaphraseDemos);

struct ParaphraseOptions {
  int demo_template_id = 0;  // 0 draws one of 1..6 per example
  std::optional<int> instruction_template_id;
  std::size_t max_demo_pairs = kMaxParaphraseDemos;
  int max_attempts = 3;
  std::size_t concurrency = 1;
};

/// Paraphrases sentence1 of every example.
///
/// Template choices are drawn from `rng` in input order before any request
/// is issued, and records come back in input order whatever order the
/// completions arrive in, so replayed runs are bit-identical.
std::vector<AugmentationRecord> paraphrase_examples(LlmClient& client,
                                                    const std::vector<LabeledExample>& examples,
                                                    const std::string& task,
                                                    const std::vector<DemoPairRecord>& demo_pool,
                                                    const ParaphraseOptions& options, Rng& rng);

}  // namespace cppf
