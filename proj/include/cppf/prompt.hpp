#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cppf/dataset.hpp"
#include "cppf/rng.hpp"
#include "cppf/task.hpp"

namespace cppf {

enum class RenderMode { kMasked, kVerbalized };

struct RenderedSentence {
  std::string text;
  bool mask_present = false;
  std::string source_id;
  RenderMode mode = RenderMode::kMasked;
};

enum class ViewKind { kOriginal, kParaphrase };

std::string_view to_string(ViewKind k);

struct CharSpan {
  std::size_t begin = 0;
  std::size_t length = 0;
  std::size_t end() const { return begin + length; }
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

/// One complete model input: a masked target followed by verbalized
/// demonstrations. `segments[0]` is the target; the rest follow `demo_ids`.
struct PromptView {
  std::string text;
  CharSpan mask_span;
  std::string target_id;
  std::vector<std::string> demo_ids;
  ViewKind kind = ViewKind::kOriginal;
  std::string label;
  std::vector<CharSpan> segments;
};

inline constexpr std::string_view kDefaultSeparator = " ";
inline constexpr std::size_t kDefaultDemoCount = 2;

RenderedSentence render_template(const TaskSpec& spec, const LabeledExample& example,
                                 RenderMode mode);

// Uniform draw without replacement from the training split, never the target.
std::vector<LabeledExample> sample_demonstrations(const FewShotSplit& split,
                                                  const LabeledExample& target, std::size_t count,
                                                  Rng& rng);

PromptView assemble_prompt(const RenderedSentence& target,
                           const std::vector<RenderedSentence>& demos,
                           std::string_view separator = kDefaultSeparator);

// Target plus freshly sampled demonstrations, fully labelled.
PromptView build_prompt(const TaskSpec& spec, const LabeledExample& target,
                        const FewShotSplit& split, Rng& rng, ViewKind kind = ViewKind::kOriginal,
                        std::size_t demo_count = kDefaultDemoCount,
                        std::string_view separator = kDefaultSeparator);

struct ViewPair {
  PromptView first;   // original target, demos 1..k
  PromptView second;  // paraphrased target, demos k+1..2k
  bool degenerate_paraphrase = false;
};

/// Builds the original view and the paraphrase view of one training example.
///
/// Both demonstration sets are drawn from `rng` in sequence (first view's
/// first), independently of each other, so they may overlap. The paraphrase
/// replaces sentence1; sentence2 of pair tasks is kept.
ViewPair build_views(const LabeledExample& target, const std::string& paraphrased_text,
                     const FewShotSplit& split, const TaskSpec& spec, Rng& rng,
                     std::size_t demo_count = kDefaultDemoCount,
                     std::string_view separator = kDefaultSeparator);

}  // namespace cppf
