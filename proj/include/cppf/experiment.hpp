#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cppf/back_translation.hpp"
#include "cppf/dataset.hpp"
#include "cppf/eda.hpp"
#include "cppf/llm_client.hpp"
#include "cppf/model.hpp"
#include "cppf/paraphrase.hpp"
#include "cppf/task.hpp"
#include "cppf/tokenizer.hpp"
#include "cppf/trainer.hpp"

namespace cppf {

inline constexpr std::size_t kDefaultShots = 16;
inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

enum class MethodKind { kLmCppf, kMlmOnly, kSupConNoAug, kEda, kBackTranslation };

struct Method {
  MethodKind kind = MethodKind::kLmCppf;
  std::optional<Pivot> pivot;  // set for kBackTranslation

  std::string name() const;
  // Needs a completion fixture (paraphrase or back-translation replay).
  bool needs_replay() const;
};

// "lm-cppf", "mlm-only", "supcon-no-aug", "eda", "bt-<AR|FR|DE|ZH|HI>".
Method parse_method(std::string_view s);

struct ExperimentConfig {
  std::string task;
  std::string method = "lm-cppf";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t k = kDefaultShots;
  bool resample_per_seed = true;  // false: every seed uses the split of seeds[0]

  std::filesystem::path dataset;
  std::optional<std::filesystem::path> task_file;
  std::optional<std::filesystem::path> replay_fixture;
  std::optional<std::filesystem::path> demo_pairs;
  std::optional<std::filesystem::path> lexicon;
  std::filesystem::path output_root = "out";

  ModelConfig model;  // vocab_size is derived from the data
  TrainConfig train;  // task and seed are filled per run
  ParaphraseOptions paraphrase;
  double eda_alpha = 0.1;
  std::size_t eval_demo_count = kDefaultDemoCount;

  // Method defaults on top of the task's trainer defaults.
  static ExperimentConfig defaults(const std::string& task, const std::string& method);
  void validate() const;
};

std::string experiment_config_to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const std::string& text);

/// SHA-256 over every behavior-affecting field plus the contents of the
/// dataset and fixture files. The output root is excluded.
std::string config_digest(const ExperimentConfig& c);

// Looks the task up in the built-ins, then in config.task_file.
TaskSpec resolve_task(const ExperimentConfig& c);

struct Report {
  std::string task;
  std::string method;
  std::string metric;
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;  // per seed
  double mean = 0.0;
  std::optional<double> std;   // null for a single seed
  std::string config_digest;
  std::vector<std::string> checkpoint_digests;
  double runtime_seconds = 0.0;
};

std::string report_to_json(const Report& r);
Report report_from_json(const std::string& text);
Report load_report(const std::filesystem::path& path);
// Digest of the report with the runtime left out.
std::string report_digest(const Report& r);

/// Argmax of the restricted label distribution for every example; each
/// prompt gets `demo_count` demonstrations from the training split.
std::vector<std::size_t> predict(const MaskedLm& model, const std::vector<LabeledExample>& examples,
                                 const FewShotSplit& split, const TaskSpec& spec,
                                 const Tokenizer& tokenizer, Rng& rng,
                                 std::size_t demo_count = kDefaultDemoCount);

double evaluate(const MaskedLm& model, const std::vector<LabeledExample>& test,
                const FewShotSplit& split, const TaskSpec& spec, const Tokenizer& tokenizer,
                Rng& rng, std::size_t demo_count = kDefaultDemoCount);

// Vocabulary over the dataset, the augmentations, the template and verbalizers.
Vocabulary experiment_vocabulary(const std::vector<LabeledExample>& examples,
                                 const std::vector<AugmentationRecord>& augmentations,
                                 const TaskSpec& spec);

AugmentationMap to_augmentation_map(const std::vector<AugmentationRecord>& records);

/// External services for the augmenters. A null `llm` means completions
/// come only from the replay fixture, and a miss is an error.
struct AugmentationResources {
  std::shared_ptr<ReplayStore> store;
  std::shared_ptr<LlmClient> llm;  // consulted on replay misses
  std::vector<DemoPairRecord> demo_pairs;
  SynonymLexicon lexicon;
};

AugmentationResources load_resources(const ExperimentConfig& c,
                                     std::shared_ptr<LlmClient> live = nullptr);

/// Augments every training example of `split` for the configured method.
/// Methods without augmentation return an empty list.
std::vector<AugmentationRecord> precompute_augmentations(const ExperimentConfig& c,
                                                         const TaskSpec& spec,
                                                         const FewShotSplit& split,
                                                         std::uint64_t seed,
                                                         AugmentationResources& resources);

/// Runs the augmentation step of every seed with `live` behind the replay
/// store and saves the store (old entries plus new ones) to `out`. Returns
/// the number of stored completions.
std::size_t record_replay(const ExperimentConfig& c, std::shared_ptr<LlmClient> live,
                          const std::filesystem::path& out);

// The split a seed trains on.
FewShotSplit seed_split(const ExperimentConfig& c, const std::vector<LabeledExample>& dataset,
                        const TaskSpec& spec, std::uint64_t seed);

// Trainer settings of one seed under the configured method.
TrainConfig seed_train_config(const ExperimentConfig& c, std::uint64_t seed);

/// For each seed: sample the split, augment, train, evaluate on the test
/// remainder. Artifacts go to output_root/<task>/<method>/<digest>/, with
/// config.json, report.json and seed-<s>/{augmentations.jsonl, vocab.txt,
/// steps.jsonl, checkpoint.bin}. A failing seed aborts the run; finished
/// seeds keep their artifacts.
Report run_experiment(const ExperimentConfig& c, std::shared_ptr<LlmClient> live = nullptr);

std::filesystem::path experiment_dir(const ExperimentConfig& c);

/// Aligned method x (mean, std) table for reports of one task.
struct Comparison {
  std::string task;
  std::vector<Report> rows;

  // Best mean in bold (**x**).
  std::string to_text() const;
  // Header: task,method,mean,std,n_seeds
  std::string to_csv() const;
};

Comparison compare(const std::vector<Report>& reports);

}  // namespace cppf
