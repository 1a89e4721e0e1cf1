#include <gtest/gtest.h>

#include <set>

#include "cppf/error.hpp"
#include "cppf/prompt.hpp"
#include "cppf/task.hpp"
#include "support.hpp"

namespace cppf {
namespace {

std::size_t count_masks(const std::string& s) {
  std::size_t n = 0;
  for (auto pos = s.find(kMaskToken); pos != std::string::npos; pos = s.find(kMaskToken, pos + 1)) ++n;
  return n;
}

LabeledExample ex(std::string id, std::string s1, std::string label,
                  std::optional<std::string> s2 = std::nullopt) {
  return {std::move(id), std::move(s1), std::move(s2), std::move(label)};
}

TEST(RenderTemplate, MaskedAndVerbalized) {
  const auto& sst2 = get_task("SST-2");
  const auto masked = render_template(sst2, ex("a", "a fun ride .", "positive"), RenderMode::kMasked);
  EXPECT_EQ(masked.text, "a fun ride . It was [MASK] .");
  EXPECT_TRUE(masked.mask_present);
  const auto verb = render_template(sst2, ex("a", "a fun ride .", "positive"), RenderMode::kVerbalized);
  EXPECT_EQ(verb.text, "a fun ride . It was great .");
  EXPECT_FALSE(verb.mask_present);
  const auto mnli = render_template(get_task("MNLI"), ex("m", "p", "neutral", "h"), RenderMode::kMasked);
  EXPECT_EQ(mnli.text, "p ? [MASK] , h");
}

TEST(RenderTemplate, Errors) {
  EXPECT_THROW(render_template(get_task("MNLI"), ex("m", "p", "neutral"), RenderMode::kMasked),
               DataError);
  EXPECT_THROW(render_template(get_task("SST-2"), ex("a", "x", "neutral"), RenderMode::kVerbalized),
               Error);
  EXPECT_THROW(render_template(get_task("SST-2"), ex("a", "x [MASK]", "positive"), RenderMode::kMasked),
               DataError);
}

TEST(RenderTemplate, VerbalizerAppearsOnceAtTheMaskForEveryTaskAndLabel) {
  for (const auto& name : builtin_task_names()) {
    const auto& spec = get_task(name);
    for (const auto& label : spec.labels()) {
      auto e = ex("x", "zzz", label);
      if (spec.has_second_slot()) e.sentence2 = "qqq";
      const auto masked = render_template(spec, e, RenderMode::kMasked).text;
      const auto verb = render_template(spec, e, RenderMode::kVerbalized).text;
      const auto pos = masked.find(kMaskToken);
      const auto& word = spec.verbalizer(label);
      EXPECT_EQ(verb.substr(pos, word.size()), word) << name << ' ' << label;
      EXPECT_EQ(verb, masked.substr(0, pos) + word + masked.substr(pos + kMaskToken.size()));
    }
  }
}

TEST(AssemblePrompt, Sst2Golden) {
  const auto& spec = get_task("SST-2");
  const auto target = render_template(spec, ex("t", "a fun ride .", "positive"), RenderMode::kMasked);
  const std::vector<RenderedSentence> demos = {
      render_template(spec, ex("d1", "the plot drags .", "negative"), RenderMode::kVerbalized),
      render_template(spec, ex("d2", "a gorgeous film .", "positive"), RenderMode::kVerbalized)};
  const auto view = assemble_prompt(target, demos);
  EXPECT_EQ(view.text, testing::golden("prompt_sst2.txt"));
  EXPECT_EQ(count_masks(view.text), 1u);
  EXPECT_EQ(view.text.substr(view.mask_span.begin, view.mask_span.length), "[MASK]");
  EXPECT_LT(view.mask_span.end(), target.text.size() + 1);
  EXPECT_EQ(view.demo_ids, (std::vector<std::string>{"d1", "d2"}));
}

TEST(AssemblePrompt, MnliGolden) {
  const auto& spec = get_task("MNLI");
  const auto target = render_template(
      spec, ex("t", "A man plays a guitar", "entailment", "A person makes music"), RenderMode::kMasked);
  const std::vector<RenderedSentence> demos = {
      render_template(spec, ex("d1", "the cat sleeps", "contradiction", "the cat is running"),
                      RenderMode::kVerbalized),
      render_template(spec, ex("d2", "two kids laugh", "neutral", "the kids are siblings"),
                      RenderMode::kVerbalized)};
  const auto view = assemble_prompt(target, demos);
  EXPECT_EQ(view.text, testing::golden("prompt_mnli.txt"));
  EXPECT_EQ(count_masks(view.text), 1u);
}

TEST(AssemblePrompt, EmptyDemosAndContractViolations) {
  const auto& spec = get_task("SST-2");
  const auto target = render_template(spec, ex("t", "ok .", "positive"), RenderMode::kMasked);
  EXPECT_EQ(assemble_prompt(target, {}).text, target.text);
  EXPECT_THROW(assemble_prompt(target, {target}), DataError);
  const auto verb = render_template(spec, ex("t", "ok .", "positive"), RenderMode::kVerbalized);
  EXPECT_THROW(assemble_prompt(verb, {}), DataError);
}

TEST(SampleDemonstrations, ExcludesTargetAndIsDeterministic) {
  const auto s = testing::make_toy_setup(3);
  const auto target = s.split.flat_train().front();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    const auto da = sample_demonstrations(s.split, target, 2, a);
    const auto db = sample_demonstrations(s.split, target, 2, b);
    ASSERT_EQ(da.size(), 2u);
    EXPECT_EQ(da, db);
    EXPECT_NE(da[0].id, da[1].id);
    for (const auto& d : da) EXPECT_NE(d.id, target.id);
  }
  Rng rng(1);
  EXPECT_TRUE(sample_demonstrations(s.split, target, 0, rng).empty());
  EXPECT_THROW(sample_demonstrations(s.split, target, 32, rng), DataError);
}

TEST(BuildViews, DemosDrawnInSequenceFromTheRng) {
  const auto s = testing::make_toy_setup(2);
  const auto target = s.split.flat_train()[5];
  const std::string para = toy::rule_paraphrase(target.sentence1);
  Rng rng(42);
  const auto views = build_views(target, para, s.split, s.spec, rng);

  // Oracle: the pool is the train split minus the target, in label order;
  // the first view takes the first two sampled indices, the second the next two.
  std::vector<std::string> pool;
  for (const auto& e : s.split.flat_train()) {
    if (e.id != target.id) pool.push_back(e.id);
  }
  Rng oracle(42);
  const auto first = oracle.sample_indices(pool.size(), 2);
  const auto second = oracle.sample_indices(pool.size(), 2);
  EXPECT_EQ(views.first.demo_ids, (std::vector<std::string>{pool[first[0]], pool[first[1]]}));
  EXPECT_EQ(views.second.demo_ids, (std::vector<std::string>{pool[second[0]], pool[second[1]]}));

  EXPECT_EQ(views.first.kind, ViewKind::kOriginal);
  EXPECT_EQ(views.second.kind, ViewKind::kParaphrase);
  EXPECT_EQ(views.first.label, views.second.label);
  EXPECT_TRUE(views.second.text.starts_with(para));
  EXPECT_TRUE(views.first.text.starts_with(target.sentence1));
  EXPECT_FALSE(views.degenerate_paraphrase);
  EXPECT_EQ(count_masks(views.first.text), 1u);
  EXPECT_EQ(count_masks(views.second.text), 1u);
}

TEST(BuildViews, DegenerateParaphraseIsFlagged) {
  const auto s = testing::make_toy_setup(2);
  const auto target = s.split.flat_train()[0];
  Rng rng(1);
  const auto views = build_views(target, target.sentence1, s.split, s.spec, rng);
  EXPECT_TRUE(views.degenerate_paraphrase);
  Rng rng2(1);
  EXPECT_THROW(build_views(target, "", s.split, s.spec, rng2), DataError);
}

TEST(BuildPrompt, ReassemblingFromRecordedIdsReproducesTheText) {
  const auto s = testing::make_toy_setup(4);
  Rng rng(9);
  for (const auto& target : s.split.flat_train()) {
    const auto view = build_prompt(s.spec, target, s.split, rng);
    std::vector<RenderedSentence> demos;
    for (const auto& id : view.demo_ids) {
      demos.push_back(render_template(s.spec, *s.split.find_train(id), RenderMode::kVerbalized));
    }
    const auto again = assemble_prompt(render_template(s.spec, target, RenderMode::kMasked), demos);
    EXPECT_EQ(again.text, view.text);
    EXPECT_EQ(count_masks(view.text), 1u);
    EXPECT_EQ(view.text.substr(view.mask_span.begin, view.mask_span.length), "[MASK]");
  }
}

}  // namespace
}  // namespace cppf
