#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "cppf/dataset.hpp"
#include "cppf/error.hpp"
#include "cppf/task.hpp"
#include "support.hpp"

namespace cppf {
namespace {

using testing::TempDir;

struct TableRow {
  std::string task;
  std::string tpl;
  std::vector<std::pair<std::string, std::string>> verbalizers;
  Metric metric;
};

// Hand copy of the primary templates and label words of the six tasks.
const std::vector<TableRow>& table_rows() {
  static const std::vector<TableRow> rows = {
      {"SST-2", "<S1> It was [MASK] .", {{"positive", "great"}, {"negative", "terrible"}},
       Metric::kAccuracy},
      {"SST-5",
       "<S1> It was [MASK] .",
       {{"v.positive", "great"},
        {"positive", "good"},
        {"neutral", "okay"},
        {"negative", "bad"},
        {"v.negative", "terrible"}},
       Metric::kAccuracy},
      {"MNLI",
       "<S1> ? [MASK] , <S2>",
       {{"entailment", "Yes"}, {"neutral", "Maybe"}, {"contradiction", "No"}},
       Metric::kAccuracy},
      {"CoLA",
       "<S1> This is [MASK] .",
       {{"grammatical", "correct"}, {"not_grammatical", "incorrect"}},
       Metric::kMatthewsCorrelation},
      {"QNLI", "<S1> ? [MASK] , <S2>", {{"entailment", "Yes"}, {"not_entailment", "No"}},
       Metric::kAccuracy},
      {"CR", "<S1> It was [MASK] .", {{"positive", "great"}, {"negative", "terrible"}},
       Metric::kAccuracy},
  };
  return rows;
}

TEST(TaskRegistry, BuiltinsMatchTheTemplateTable) {
  for (const auto& row : table_rows()) {
    const auto& spec = get_task(row.task);
    EXPECT_EQ(spec.template_text(), row.tpl) << row.task;
    EXPECT_EQ(spec.metric(), row.metric) << row.task;
    ASSERT_EQ(spec.labels().size(), row.verbalizers.size()) << row.task;
    for (std::size_t i = 0; i < row.verbalizers.size(); ++i) {
      EXPECT_EQ(spec.labels()[i], row.verbalizers[i].first) << row.task;
      EXPECT_EQ(spec.verbalizer(row.verbalizers[i].first), row.verbalizers[i].second) << row.task;
    }
  }
  EXPECT_EQ(builtin_task_names().size(), 6u);
}

TEST(TaskRegistry, UnknownTaskIsAnError) {
  EXPECT_THROW(get_task("SST-3"), ConfigError);
}

TEST(TaskRegistry, TemplatesNeedExactlyOneMask) {
  EXPECT_THROW(TaskSpec::make("t", "<S1> no mask", {{"a", "x"}}, Metric::kAccuracy), Error);
  EXPECT_THROW(TaskSpec::make("t", "<S1> [MASK] [MASK]", {{"a", "x"}}, Metric::kAccuracy), Error);
  EXPECT_THROW(TaskSpec::make("t", "<S1> [MASK]", {{"a", "x"}, {"b", "x"}}, Metric::kAccuracy),
               Error);
  EXPECT_NO_THROW(TaskSpec::make("t", "<S1> [MASK]", {{"a", "x"}, {"b", "y"}}, Metric::kAccuracy));
}

TEST(TaskRegistry, UserTasksLoadFromFileButCannotShadowBuiltins) {
  TempDir dir("tasks");
  {
    std::ofstream out(dir.path() / "tasks.jsonl");
    out << R"({"name":"custom","template":"<S1> so [MASK] .","verbalizers":[["up","yes"],["down","no"]],"metric":"matthews-correlation"})"
        << '\n';
  }
  TaskRegistry registry;
  EXPECT_EQ(registry.load_file(dir.path() / "tasks.jsonl"), 1u);
  const auto& spec = registry.get("custom");
  EXPECT_EQ(spec.verbalizer("down"), "no");
  EXPECT_EQ(spec.metric(), Metric::kMatthewsCorrelation);
  EXPECT_THROW(registry.add(get_task("SST-2")), Error);
}

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

TEST(Dataset, LoadsValidRecords) {
  TempDir dir("ds");
  write_lines(dir.path() / "d.jsonl",
              {R"({"id":"a","sentence1":"fine film .","label":"positive"})",
               R"({"id":"b","sentence1":"dull film .","label":"negative"})",
               R"({"sentence1":"nice .","label":"positive"})"});
  const auto data = load_dataset(dir.path() / "d.jsonl", DatasetFormat::kJsonLines, get_task("SST-2"));
  ASSERT_EQ(data.size(), 3u);
  EXPECT_EQ(data[0].id, "a");
  EXPECT_EQ(data[2].id, "L3");
}

TEST(Dataset, EmptyFileGivesEmptyList) {
  TempDir dir("ds");
  write_lines(dir.path() / "d.jsonl", {});
  EXPECT_TRUE(
      load_dataset(dir.path() / "d.jsonl", DatasetFormat::kJsonLines, get_task("SST-2")).empty());
}

TEST(Dataset, UnknownLabelNamesTheRecord) {
  TempDir dir("ds");
  write_lines(dir.path() / "d.jsonl",
              {R"({"id":"a","sentence1":"fine .","label":"positive"})",
               R"({"id":"typo","sentence1":"fine .","label":"positve"})"});
  try {
    load_dataset(dir.path() / "d.jsonl", DatasetFormat::kJsonLines, get_task("SST-2"));
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("positve"), std::string::npos) << msg;
  }
}

TEST(Dataset, PairTasksNeedSentence2AndMalformedLinesReportLineNumbers) {
  TempDir dir("ds");
  write_lines(dir.path() / "m.jsonl", {R"({"id":"a","sentence1":"p","label":"entailment"})"});
  EXPECT_THROW(load_dataset(dir.path() / "m.jsonl", DatasetFormat::kJsonLines, get_task("MNLI")),
               DataError);
  write_lines(dir.path() / "bad.jsonl", {R"({"id":"a","sentence1":"p","label":"positive"})", "{oops"});
  try {
    load_dataset(dir.path() / "bad.jsonl", DatasetFormat::kJsonLines, get_task("SST-2"));
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

std::vector<LabeledExample> two_class(std::size_t per_class) {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    out.push_back({"p" + std::to_string(i), "good " + std::to_string(i), std::nullopt, "positive"});
    out.push_back({"n" + std::to_string(i), "bad " + std::to_string(i), std::nullopt, "negative"});
  }
  return out;
}

TEST(FewShot, ExactlyKPerClassAndDisjointFromTest) {
  const auto data = two_class(100);
  const auto split = sample_few_shot(data, 16, 7);
  EXPECT_EQ(split.train_size(), 32u);
  for (const auto& [label, list] : split.train) EXPECT_EQ(list.size(), 16u) << label;
  EXPECT_EQ(split.test.size(), 200u - 32u);
  std::set<std::string> train_ids;
  for (const auto& ex : split.flat_train()) train_ids.insert(ex.id);
  for (const auto& ex : split.test) EXPECT_FALSE(train_ids.contains(ex.id));
}

TEST(FewShot, KZeroGivesEmptyLists) {
  const auto split = sample_few_shot(two_class(5), 0, 1, 0, {"positive", "negative"});
  EXPECT_EQ(split.train_size(), 0u);
  EXPECT_EQ(split.test.size(), 10u);
}

TEST(FewShot, SameSeedIsByteIdentical) {
  const auto data = two_class(100);
  EXPECT_EQ(split_to_json(sample_few_shot(data, 16, 7)), split_to_json(sample_few_shot(data, 16, 7)));
}

TEST(FewShot, DistinctSeedsGiveDistinctSplits) {
  const auto data = two_class(100);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 20; ++seed) seen.insert(split_to_json(sample_few_shot(data, 16, seed)));
  EXPECT_EQ(seen.size(), 20u);
}

TEST(FewShot, ShortClassErrorNamesClassAndCounts) {
  auto data = two_class(20);
  data.push_back({"x", "meh", std::nullopt, "neutral"});
  try {
    sample_few_shot(data, 16, 1);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("neutral"), std::string::npos) << msg;
    EXPECT_NE(msg.find("1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("16"), std::string::npos) << msg;
  }
}

TEST(FewShot, DevExamplesComeFromTheRemainder) {
  const auto split = sample_few_shot(two_class(50), 16, 3, 16);
  EXPECT_EQ(split.dev.size(), 32u);
  EXPECT_EQ(split.test.size(), 100u - 64u);
}

TEST(FewShot, SplitRoundTripsThroughJson) {
  TempDir dir("split");
  const auto split = sample_few_shot(two_class(30), 4, 9, 2);
  save_split(dir.path() / "s.json", split);
  EXPECT_EQ(load_split(dir.path() / "s.json"), split);
}

}  // namespace
}  // namespace cppf
