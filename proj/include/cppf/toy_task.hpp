#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cppf/dataset.hpp"
#include "cppf/eda.hpp"
#include "cppf/experiment.hpp"
#include "cppf/llm_client.hpp"
#include "cppf/paraphrase.hpp"
#include "cppf/task.hpp"

// Synthetic two-class sentiment task with disjoint positive and negative
// word sets, and a rule-based paraphraser standing in for an LLM endpoint.
namespace cppf::toy {

inline constexpr std::string_view kTaskName = "toy-sentiment";
inline constexpr std::size_t kTestSize = 500;

TaskSpec task_spec();
// One JSON Lines task record for TaskRegistry::load_file.
std::string task_json();

struct DataOptions {
  std::size_t shots = kDefaultShots;
  std::size_t test_size = kTestSize;  // split evenly over both classes
  std::uint64_t seed = 20240601;
};

// shots + test_size / 2 examples per class, interleaved by class.
std::vector<LabeledExample> make_dataset(const DataOptions& options = {});

// Synonym table over the sentiment words and the subjects.
SynonymLexicon lexicon();
void save_lexicon(const std::filesystem::path& path);

// Replaces every word that has a synonym with its first synonym.
std::string rule_paraphrase(std::string_view text);

// The sentence a paraphrase prompt asks about, or nullopt if the prompt is
// not a paraphrase prompt.
std::optional<std::string> paraphrase_query(const std::string& prompt);

/// Fake completion endpoint. Paraphrase prompts get rule_paraphrase of the
/// query; translation prompts into English get rule_paraphrase of the text,
/// into any other language the text unchanged.
class SynonymParaphraseClient : public LlmClient {
 public:
  std::string complete(const std::string& prompt) override;
  std::string endpoint() const override { return "toy-synonym-paraphraser"; }
};

// A few hand-built (original, paraphrase) pairs per label.
std::vector<DemoPairRecord> demo_pairs();

struct Fixtures {
  std::filesystem::path dataset;
  std::filesystem::path task_file;
  std::filesystem::path demo_pairs;
  std::filesystem::path lexicon;
  std::filesystem::path replay;
};

/// Writes dataset, task file, demonstration pairs and lexicon under `dir`,
/// then records the replay fixture for lm-cppf and every back-translation
/// pivot over `seeds`.
Fixtures write_fixtures(const std::filesystem::path& dir, const std::vector<std::uint64_t>& seeds,
                        const DataOptions& options = {});

// Trainer settings sized for a model trained from scratch.
TrainConfig train_config();

ExperimentConfig experiment_config(const Fixtures& fixtures, const std::string& method,
                                   const std::filesystem::path& output_root,
                                   const std::vector<std::uint64_t>& seeds = {1, 2, 3, 4, 5});

}  // namespace cppf::toy
