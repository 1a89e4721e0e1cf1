#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "cppf/error.hpp"
#include "cppf/experiment.hpp"
#include "cppf/metrics.hpp"
#include "json.hpp"
#include "support.hpp"

namespace cppf {
namespace {

std::vector<std::size_t> confusion_to_lists(int tp, int tn, int fp, int fn, std::vector<std::size_t>& gold) {
  std::vector<std::size_t> pred;
  auto push = [&](int n, std::size_t p, std::size_t g) {
    for (int i = 0; i < n; ++i) {
      pred.push_back(p);
      gold.push_back(g);
    }
  };
  push(tp, 1, 1);
  push(tn, 0, 0);
  push(fp, 1, 0);
  push(fn, 0, 1);
  return pred;
}

TEST(Metrics, BinaryMatthewsCorrelation) {
  std::vector<std::size_t> gold;
  const auto pred = confusion_to_lists(4, 3, 2, 1, gold);
  EXPECT_NEAR(matthews_correlation(pred, gold, 2), testing::binary_mcc(4, 3, 2, 1), 1e-12);
  EXPECT_NEAR(matthews_correlation(pred, gold, 2), 0.408248, 1e-6);
  EXPECT_DOUBLE_EQ(accuracy(pred, gold), 0.7);
  EXPECT_DOUBLE_EQ(task_metric(Metric::kMatthewsCorrelation, pred, gold, 2),
                   matthews_correlation(pred, gold, 2));
}

TEST(Metrics, MatthewsAgreesWithTheOracleOnRandomConfusions) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int tp = static_cast<int>(gen() % 20), tn = static_cast<int>(gen() % 20);
    const int fp = static_cast<int>(gen() % 20), fn = static_cast<int>(gen() % 20);
    std::vector<std::size_t> gold;
    const auto pred = confusion_to_lists(tp, tn, fp, fn, gold);
    if (pred.empty()) continue;
    EXPECT_NEAR(matthews_correlation(pred, gold, 2), testing::binary_mcc(tp, tn, fp, fn), 1e-12);
  }
}

TEST(Metrics, DegenerateCases) {
  const std::vector<std::size_t> gold = {0, 1, 0, 1, 1};
  const std::vector<std::size_t> constant(5, 1);
  EXPECT_EQ(matthews_correlation(constant, gold, 2), 0.0);
  EXPECT_DOUBLE_EQ(accuracy(gold, gold), 1.0);
  EXPECT_DOUBLE_EQ(matthews_correlation(gold, gold, 2), 1.0);
  const std::vector<std::size_t> three = {0, 1, 2, 2, 1, 0};
  EXPECT_DOUBLE_EQ(matthews_correlation(three, three, 3), 1.0);
}

TEST(Metrics, MeanAndSampleStd) {
  EXPECT_DOUBLE_EQ(mean({1.0, 2.0, 3.0, 4.0}), 2.5);
  EXPECT_NEAR(*sample_std({1.0, 2.0, 3.0, 4.0}), std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_FALSE(sample_std({0.8}).has_value());
}

Report sample_report(std::string method, std::vector<double> values) {
  Report r;
  r.task = "SST-2";
  r.method = std::move(method);
  r.metric = "accuracy";
  for (std::size_t i = 0; i < values.size(); ++i) r.seeds.push_back(i + 1);
  r.values = values;
  r.mean = mean(values);
  r.std = sample_std(values);
  r.config_digest = "abc";
  r.checkpoint_digests.assign(values.size(), "d");
  r.runtime_seconds = 1.5;
  return r;
}

TEST(Report, JsonRoundTripAndNullStd) {
  const auto r = sample_report("lm-cppf", {0.9});
  const auto j = nlohmann::json::parse(report_to_json(r));
  EXPECT_TRUE(j.at("std").is_null());
  const auto back = report_from_json(report_to_json(r));
  EXPECT_EQ(report_to_json(back), report_to_json(r));
  EXPECT_FALSE(back.std.has_value());

  auto later = r;
  later.runtime_seconds = 99.0;
  EXPECT_EQ(report_digest(later), report_digest(r));
  later.values[0] = 0.8;
  EXPECT_NE(report_digest(later), report_digest(r));
}

TEST(Compare, BoldsTheBestMeanAndWritesCsv) {
  const std::vector<Report> reports = {
      sample_report("lm-cppf", {0.9, 0.92}), sample_report("mlm-only", {0.8, 0.82}),
      sample_report("supcon-no-aug", {0.85, 0.86}), sample_report("eda", {0.83}),
      sample_report("bt-FR", {0.88, 0.87})};
  const auto table = compare(reports);
  const auto text = table.to_text();
  EXPECT_NE(text.find("**0.9100**"), std::string::npos) << text;
  EXPECT_EQ(text.find("**0.8100**"), std::string::npos);
  EXPECT_NE(text.find("n/a"), std::string::npos);

  const auto csv = table.to_csv();
  std::vector<std::string> lines;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "task,method,mean,std,n_seeds");
  EXPECT_EQ(lines[4], "SST-2,eda,0.830000,,1");
  EXPECT_TRUE(lines[1].starts_with("SST-2,lm-cppf,0.910000,0.014142,2")) << lines[1];

  EXPECT_THROW(compare({}), DataError);
  auto other = sample_report("eda", {0.5});
  other.task = "CR";
  EXPECT_THROW(compare({reports[0], other}), DataError);
}

TEST(Method, Parsing) {
  EXPECT_EQ(parse_method("bt-zh").name(), "bt-ZH");
  EXPECT_TRUE(parse_method("lm-cppf").needs_replay());
  EXPECT_FALSE(parse_method("eda").needs_replay());
  EXPECT_FALSE(parse_method("mlm-only").needs_replay());
  EXPECT_THROW(parse_method("bt-ES"), ConfigError);
  EXPECT_THROW(parse_method("simcse"), ConfigError);
}

TEST(ExperimentConfig, DigestTracksBehaviorNotOutputLocation) {
  testing::TempDir dir("cfg");
  const auto fixtures = toy::write_fixtures(dir.path() / "fx", {1}, {4, 20, 20240601});
  auto c = toy::experiment_config(fixtures, "lm-cppf", dir.path() / "out", {1});
  const auto base = config_digest(c);
  auto moved = c;
  moved.output_root = dir.path() / "elsewhere";
  EXPECT_EQ(config_digest(moved), base);
  auto lr = c;
  lr.train.lr_mlm = 2e-3;
  EXPECT_NE(config_digest(lr), base);
  auto seeds = c;
  seeds.seeds = {2};
  EXPECT_NE(config_digest(seeds), base);
  {
    std::ofstream out(fixtures.dataset, std::ios::app);
    out << R"({"id":"extra","sentence1":"fine .","label":"positive"})" << '\n';
  }
  EXPECT_NE(config_digest(c), base);

  const auto back = experiment_config_from_json(experiment_config_to_json(c));
  EXPECT_EQ(experiment_config_to_json(back), experiment_config_to_json(c));
  auto bad = c;
  bad.seeds.clear();
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Experiment, SeedConfigsPerMethod) {
  auto c = ExperimentConfig::defaults("SST-2", "mlm-only");
  auto t = seed_train_config(c, 4);
  EXPECT_FALSE(t.supcon_enabled);
  EXPECT_EQ(t.seed, 4u);
  EXPECT_EQ(t.task, "SST-2");
  c = ExperimentConfig::defaults("SST-2", "supcon-no-aug");
  EXPECT_EQ(seed_train_config(c, 1).pair_strategy, PairStrategy::kSameClass);
  c = ExperimentConfig::defaults("SST-2", "lm-cppf");
  EXPECT_EQ(seed_train_config(c, 1).pair_strategy, PairStrategy::kParaphrase);
  EXPECT_EQ(seed_train_config(c, 1).batch_size_supcon, 8u);
}

class ToyRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("exp");
    fixtures_ = toy::write_fixtures(dir_->path() / "fx", {1, 2}, {16, 40, 20240601});
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  ExperimentConfig config(const std::string& method, const std::string& out) const {
    auto c = toy::experiment_config(fixtures_, method, dir_->path() / out, {1, 2});
    c.train.max_steps = 6;
    c.model.hidden_dim = 16;
    c.model.layers = 1;
    c.model.heads = 2;
    return c;
  }

  static testing::TempDir* dir_;
  static toy::Fixtures fixtures_;
};

testing::TempDir* ToyRun::dir_ = nullptr;
toy::Fixtures ToyRun::fixtures_;

TEST_F(ToyRun, IdenticalConfigsGiveIdenticalReports) {
  const auto a = run_experiment(config("lm-cppf", "a"));
  const auto b = run_experiment(config("lm-cppf", "b"));
  EXPECT_EQ(report_digest(a), report_digest(b));
  EXPECT_EQ(a.values.size(), 2u);
  EXPECT_NEAR(a.mean, mean(a.values), 1e-15);
  ASSERT_TRUE(a.std.has_value());
  EXPECT_NEAR(*a.std, *sample_std(a.values), 1e-15);

  const auto out = experiment_dir(config("lm-cppf", "a"));
  EXPECT_EQ(out.filename().string(), a.config_digest.substr(0, 16));
  for (const auto* f : {"config.json", "report.json", "seed-1/augmentations.jsonl", "seed-1/vocab.txt",
                        "seed-1/steps.jsonl", "seed-2/checkpoint.bin"}) {
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  }
  EXPECT_EQ(report_digest(load_report(out / "report.json")), report_digest(a));
}

TEST_F(ToyRun, EveryBaselineRunsOffline) {
  for (const std::string method : {"mlm-only", "supcon-no-aug", "eda", "bt-DE"}) {
    const auto r = run_experiment(config(method, "baselines"));
    EXPECT_EQ(r.method, method);
    EXPECT_EQ(r.values.size(), 2u);
    for (double v : r.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST_F(ToyRun, MissingReplayEntryFailsWithoutALiveEndpoint) {
  auto c = config("lm-cppf", "miss");
  c.seeds = {3};
  EXPECT_THROW(run_experiment(c), ReplayMissError);
}

}  // namespace
}  // namespace cppf
