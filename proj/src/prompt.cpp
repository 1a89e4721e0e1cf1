#include "cppf/prompt.hpp"

#include "cppf/error.hpp"

namespace cppf {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string_view to_string(ViewKind k) {
  return k == ViewKind::kOriginal ? "original" : "paraphrase";
}

RenderedSentence render_template(const TaskSpec& spec, const LabeledExample& example,
                                 RenderMode mode) {
  if (example.sentence1.find(kMaskToken) != std::string::npos ||
      (example.sentence2 && example.sentence2->find(kMaskToken) != std::string::npos)) {
    throw DataError("example " + example.id + ": sentence contains a literal [MASK]");
  }
  if (spec.has_second_slot() && !example.sentence2) {
    throw DataError("example " + example.id + ": task " + spec.name() + " requires sentence2");
  }
  // Slots are filled in one pass over the template so slot markers inside
  // the sentences themselves are never re-expanded.
  const std::string& tpl = spec.template_text();
  std::string text;
  std::size_t i = 0;
  while (i < tpl.size()) {
    std::string_view rest(tpl.data() + i, tpl.size() - i);
    if (rest.starts_with(kFirstSlot)) {
      text += example.sentence1;
      i += kFirstSlot.size();
    } else if (rest.starts_with(kSecondSlot)) {
      text += *example.sentence2;
      i += kSecondSlot.size();
    } else {
      text.push_back(tpl[i]);
      ++i;
    }
  }

  RenderedSentence out;
  out.source_id = example.id;
  out.mode = mode;
  if (mode == RenderMode::kVerbalized) {
    replace_all(text, kMaskToken, spec.verbalizer(example.label));
    out.mask_present = false;
  } else {
    out.mask_present = true;
  }
  out.text = std::move(text);
  return out;
}

std::vector<LabeledExample> sample_demonstrations(const FewShotSplit& split,
                                                  const LabeledExample& target, std::size_t count,
                                                  Rng& rng) {
  std::vector<const LabeledExample*> pool;
  for (const auto& [_, list] : split.train) {
    for (const auto& ex : list) {
      if (ex.id != target.id) pool.push_back(&ex);
    }
  }
  if (count > pool.size()) {
    throw DataError("cannot sample " + std::to_string(count) + " demonstrations from a pool of " +
                    std::to_string(pool.size()));
  }
  std::vector<LabeledExample> out;
  out.reserve(count);
  for (auto idx : rng.sample_indices(pool.size(), count)) out.push_back(*pool[idx]);
  return out;
}

PromptView assemble_prompt(const RenderedSentence& target,
                           const std::vector<RenderedSentence>& demos,
                           std::string_view separator) {
  if (target.mode != RenderMode::kMasked || !target.mask_present) {
    throw DataError("prompt target " + target.source_id + " is not masked");
  }
  const auto mask_pos = target.text.find(kMaskToken);
  if (mask_pos == std::string::npos ||
      target.text.find(kMaskToken, mask_pos + kMaskToken.size()) != std::string::npos) {
    throw DataError("prompt target " + target.source_id + " must contain exactly one [MASK]");
  }

  PromptView view;
  view.target_id = target.source_id;
  view.text = target.text;
  view.mask_span = {mask_pos, kMaskToken.size()};
  view.segments.push_back({0, target.text.size()});
  for (const auto& d : demos) {
    if (d.mode != RenderMode::kVerbalized || d.mask_present ||
        d.text.find(kMaskToken) != std::string::npos) {
      throw DataError("demonstration " + d.source_id + " contains [MASK]");
    }
    view.text += separator;
    view.segments.push_back({view.text.size(), d.text.size()});
    view.text += d.text;
    view.demo_ids.push_back(d.source_id);
  }
  return view;
}

PromptView build_prompt(const TaskSpec& spec, const LabeledExample& target,
                        const FewShotSplit& split, Rng& rng, ViewKind kind, std::size_t demo_count,
                        std::string_view separator) {
  auto masked = render_template(spec, target, RenderMode::kMasked);
  std::vector<RenderedSentence> demos;
  for (const auto& d : sample_demonstrations(split, target, demo_count, rng)) {
    demos.push_back(render_template(spec, d, RenderMode::kVerbalized));
  }
  auto view = assemble_prompt(masked, demos, separator);
  view.kind = kind;
  view.label = target.label;
  return view;
}

ViewPair build_views(const LabeledExample& target, const std::string& paraphrased_text,
                     const FewShotSplit& split, const TaskSpec& spec, Rng& rng,
                     std::size_t demo_count, std::string_view separator) {
  if (paraphrased_text.empty()) {
    throw DataError("empty paraphrase for example " + target.id);
  }
  ViewPair pair;
  pair.first = build_prompt(spec, target, split, rng, ViewKind::kOriginal, demo_count, separator);
  LabeledExample para = target;
  para.sentence1 = paraphrased_text;
  // Demonstrations exclude the original target, not just the paraphrase.
  pair.second = build_prompt(spec, para, split, rng, ViewKind::kParaphrase, demo_count, separator);
  pair.degenerate_paraphrase = paraphrased_text == target.sentence1;
  return pair;
}

}  // namespace cppf
