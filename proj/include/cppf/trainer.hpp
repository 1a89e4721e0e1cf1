#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cppf/dataset.hpp"
#include "cppf/model.hpp"
#include "cppf/objectives.hpp"
#include "cppf/optimizer.hpp"
#include "cppf/prompt.hpp"
#include "cppf/rng.hpp"
#include "cppf/task.hpp"
#include "cppf/tokenizer.hpp"

namespace cppf {

inline constexpr std::size_t kMaxStepCap = 1000;
inline constexpr double kDefaultMlmLr = 1e-5;
inline constexpr double kDefaultLrScale = 0.7;

// How the second view of each contrastive pair is chosen.
enum class PairStrategy { kParaphrase, kSameClass, kMixed };
// What a particular pair turned out to be.
enum class PairKind { kParaphrase, kSameClass, kDifferentClass };

std::string_view to_string(PairStrategy s);
std::string_view to_string(PairKind k);
PairStrategy parse_pair_strategy(std::string_view s);

// Draw probabilities for PairStrategy::kMixed.
struct StrategyWeights {
  double paraphrase = 1.0 / 3.0;
  double same_class = 1.0 / 3.0;
  double different_class = 1.0 / 3.0;
};

struct SupConDefaults {
  std::size_t batch_size;
  double lr;  // already scaled by kDefaultLrScale
};

// Contrastive-phase batch size and learning rate of a built-in task.
std::optional<SupConDefaults> supcon_defaults(std::string_view task);

// Applies the contrastive learning-rate scale to an unscaled base rate.
double scaled_supcon_lr(double base_lr, double lr_scale = kDefaultLrScale);

struct TrainConfig {
  std::string task;
  std::size_t batch_size_supcon = 8;
  std::size_t batch_size_mlm = 0;  // 0: same as batch_size_supcon
  double lr_mlm = kDefaultMlmLr;
  double lr_supcon = 7e-6;
  double lr_scale = kDefaultLrScale;
  std::size_t max_steps = kMaxStepCap;
  std::uint64_t seed = 0;
  PairStrategy pair_strategy = PairStrategy::kParaphrase;
  StrategyWeights strategy_weights;
  std::string augmenter = "paraphrase-llm";
  double temperature = kDefaultTemperature;
  double supcon_weight = 1.0;
  bool supcon_enabled = true;  // false: MLM-only baseline, pairs still drawn
  bool hard_fail_augmentation = false;
  std::size_t demo_count = kDefaultDemoCount;

  // Built-in task defaults; other tasks get batch 8, lr 7e-6.
  static TrainConfig for_task(const std::string& task);
  std::size_t mlm_batch() const { return batch_size_mlm ? batch_size_mlm : batch_size_supcon; }
  void validate() const;
};

std::string train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const std::string& text);

// Example id -> augmented sentence1 (paraphrase, back-translation, EDA).
using AugmentationMap = std::map<std::string, std::string>;

struct Pair {
  ViewPair views;
  PairKind kind = PairKind::kParaphrase;
  bool fell_back = false;
};

/// Builds the contrastive pair for one target. The first view is always the
/// original target with fresh demonstrations; the second depends on the
/// strategy (and, for kMixed, on a weighted draw).
Pair make_pair(const LabeledExample& target, const FewShotSplit& split, const TaskSpec& spec,
               const AugmentationMap& augmentations, const TrainConfig& config, Rng& rng);

struct StepRecord {
  std::size_t step = 0;
  double mlm_loss = 0.0;
  double supcon_loss = 0.0;
  double total_loss = 0.0;
  std::vector<std::string> target_ids;
  std::vector<std::string> pair_kinds;
  std::vector<std::vector<std::string>> demo_ids;  // two entries per pair
  std::string paraphrase_digest;
  std::uint64_t parameter_version = 0;
  std::string digest_after_mlm;
  std::string digest_after_supcon;
  std::size_t anchors_without_positive = 0;
  std::size_t degenerate_paraphrases = 0;
};

std::string step_record_to_json(const StepRecord& r);

/// Algorithm loop: per step, an MLM forward/backward/update on the first
/// views, then a contrastive forward of the second views, a SupCon
/// backward through both views' passes, and a second update. The two
/// phases keep separate Adam states.
class Trainer {
 public:
  Trainer(MaskedLm& model, const FewShotSplit& split, const TaskSpec& spec,
          const Tokenizer& tokenizer, const AugmentationMap& augmentations, TrainConfig config);

  StepRecord step();
  std::size_t steps_done() const { return steps_done_; }

 private:
  std::vector<LabeledExample> next_targets(std::size_t count);

  MaskedLm* model_;
  const FewShotSplit* split_;
  const TaskSpec* spec_;
  const Tokenizer* tokenizer_;
  const AugmentationMap* augmentations_;
  TrainConfig config_;
  Rng rng_;
  Adam mlm_opt_;
  Adam supcon_opt_;
  std::vector<LabeledExample> pool_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t steps_done_ = 0;
};

struct TrainingResult {
  std::vector<StepRecord> records;
};

/// Runs exactly config.max_steps steps, updating `model` in place. When
/// `out_dir` is set the step log (steps.jsonl) and the final checkpoint
/// (checkpoint.bin) are written there.
TrainingResult run_training(MaskedLm& model, const FewShotSplit& split, const TaskSpec& spec,
                            const Tokenizer& tokenizer, const AugmentationMap& augmentations,
                            const TrainConfig& config,
                            const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace cppf
