#include "cppf/trainer.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include "cppf/checkpoint.hpp"
#include "cppf/digest.hpp"
#include "cppf/error.hpp"
#include "cppf/log.hpp"
#include "json.hpp"

namespace cppf {

using nlohmann::json;

namespace {

struct TaskDefaults {
  std::string_view task;
  SupConDefaults defaults;
};

// Contrastive-phase settings per task: half the batch size of the
// multi-template baseline and 0.7x its learning rate.
constexpr std::array<TaskDefaults, 6> kSupConDefaults = {{
    {"SST-2", {8, 7e-7}},
    {"SST-5", {20, 7e-6}},
    {"MNLI", {12, 7e-6}},
    {"CoLA", {8, 7e-6}},
    {"QNLI", {8, 7e-6}},
    {"CR", {16, 7e-6}},
}};

std::vector<const LabeledExample*> same_class_pool(const FewShotSplit& split,
                                                   const LabeledExample& target) {
  std::vector<const LabeledExample*> out;
  auto it = split.train.find(target.label);
  if (it == split.train.end()) return out;
  for (const auto& ex : it->second) {
    if (ex.id != target.id) out.push_back(&ex);
  }
  return out;
}

std::vector<const LabeledExample*> other_class_pool(const FewShotSplit& split,
                                                    const LabeledExample& target) {
  std::vector<const LabeledExample*> out;
  for (const auto& [label, list] : split.train) {
    if (label == target.label) continue;
    for (const auto& ex : list) out.push_back(&ex);
  }
  return out;
}

PairKind draw_kind(const TrainConfig& config, Rng& rng) {
  switch (config.pair_strategy) {
    case PairStrategy::kParaphrase:
      return PairKind::kParaphrase;
    case PairStrategy::kSameClass:
      return PairKind::kSameClass;
    case PairStrategy::kMixed:
      break;
  }
  const auto& w = config.strategy_weights;
  const double u = rng.uniform_real();
  if (u < w.paraphrase) return PairKind::kParaphrase;
  if (u < w.paraphrase + w.same_class) return PairKind::kSameClass;
  return PairKind::kDifferentClass;
}

}  // namespace

std::string_view to_string(PairStrategy s) {
  switch (s) {
    case PairStrategy::kParaphrase: return "paraphrase";
    case PairStrategy::kSameClass: return "same-class";
    case PairStrategy::kMixed: return "mixed";
  }
  return "unknown";
}

std::string_view to_string(PairKind k) {
  switch (k) {
    case PairKind::kParaphrase: return "paraphrase";
    case PairKind::kSameClass: return "same-class";
    case PairKind::kDifferentClass: return "different-class";
  }
  return "unknown";
}

PairStrategy parse_pair_strategy(std::string_view s) {
  if (s == "paraphrase") return PairStrategy::kParaphrase;
  if (s == "same-class") return PairStrategy::kSameClass;
  if (s == "mixed") return PairStrategy::kMixed;
  throw ConfigError("unknown pair strategy '" + std::string(s) + "'");
}

std::optional<SupConDefaults> supcon_defaults(std::string_view task) {
  for (const auto& d : kSupConDefaults) {
    if (d.task == task) return d.defaults;
  }
  return std::nullopt;
}

double scaled_supcon_lr(double base_lr, double lr_scale) { return base_lr * lr_scale; }

TrainConfig TrainConfig::for_task(const std::string& task) {
  TrainConfig c;
  c.task = task;
  if (auto d = supcon_defaults(task)) {
    c.batch_size_supcon = d->batch_size;
    c.lr_supcon = d->lr;
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(lr_scale > 0.0 && lr_scale <= 1.0)) throw ConfigError("lr_scale must be in (0, 1]");
  if (max_steps > kMaxStepCap) {
    throw ConfigError("max_steps " + std::to_string(max_steps) + " exceeds the cap of " +
                      std::to_string(kMaxStepCap));
  }
  if (batch_size_supcon == 0) throw ConfigError("batch_size_supcon must be positive");
  if (lr_mlm < 0.0 || lr_supcon < 0.0) throw ConfigError("learning rates must be non-negative");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  const auto& w = strategy_weights;
  if (w.paraphrase < 0 || w.same_class < 0 || w.different_class < 0 ||
      std::abs(w.paraphrase + w.same_class + w.different_class - 1.0) > 1e-9) {
    throw ConfigError("strategy weights must be non-negative and sum to 1");
  }
}

std::string train_config_to_json(const TrainConfig& c) {
  json j = {{"task", c.task},
            {"batchSizeSupCon", c.batch_size_supcon},
            {"batchSizeMlm", c.batch_size_mlm},
            {"lrMlm", c.lr_mlm},
            {"lrSupCon", c.lr_supcon},
            {"lrScale", c.lr_scale},
            {"maxSteps", c.max_steps},
            {"seed", c.seed},
            {"pairStrategy", to_string(c.pair_strategy)},
            {"strategyWeights",
             {c.strategy_weights.paraphrase, c.strategy_weights.same_class,
              c.strategy_weights.different_class}},
            {"augmenter", c.augmenter},
            {"temperature", c.temperature},
            {"supconWeight", c.supcon_weight},
            {"supconEnabled", c.supcon_enabled},
            {"hardFailAugmentation", c.hard_fail_augmentation},
            {"demoCount", c.demo_count}};
  return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
  try {
    auto j = json::parse(text);
    TrainConfig c;
    c.task = j.at("task").get<std::string>();
    c.batch_size_supcon = j.at("batchSizeSupCon").get<std::size_t>();
    c.batch_size_mlm = j.value("batchSizeMlm", std::size_t{0});
    c.lr_mlm = j.at("lrMlm").get<double>();
    c.lr_supcon = j.at("lrSupCon").get<double>();
    c.lr_scale = j.value("lrScale", kDefaultLrScale);
    c.max_steps = j.at("maxSteps").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.pair_strategy = parse_pair_strategy(j.value("pairStrategy", std::string("paraphrase")));
    if (j.contains("strategyWeights")) {
      const auto& w = j.at("strategyWeights");
      c.strategy_weights = {w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()};
    }
    c.augmenter = j.value("augmenter", std::string("paraphrase-llm"));
    c.temperature = j.value("temperature", kDefaultTemperature);
    c.supcon_weight = j.value("supconWeight", 1.0);
    c.supcon_enabled = j.value("supconEnabled", true);
    c.hard_fail_augmentation = j.value("hardFailAugmentation", false);
    c.demo_count = j.value("demoCount", kDefaultDemoCount);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed train config: ") + e.what());
  }
}

Pair make_pair(const LabeledExample& target, const FewShotSplit& split, const TaskSpec& spec,
               const AugmentationMap& augmentations, const TrainConfig& config, Rng& rng) {
  Pair pair;
  pair.kind = draw_kind(config, rng);

  if (pair.kind == PairKind::kParaphrase) {
    auto it = augmentations.find(target.id);
    if (it != augmentations.end() && !it->second.empty()) {
      pair.views = build_views(target, it->second, split, spec, rng, config.demo_count);
      return pair;
    }
    if (config.hard_fail_augmentation) {
      throw Error("no augmentation available for example " + target.id);
    }
    warn("no augmentation for " + target.id + "; using a same-class comparison");
    pair.kind = PairKind::kSameClass;
    pair.fell_back = true;
  }

  pair.views.first =
      build_prompt(spec, target, split, rng, ViewKind::kOriginal, config.demo_count);
  const auto pool = pair.kind == PairKind::kSameClass ? same_class_pool(split, target)
                                                      : other_class_pool(split, target);
  if (pool.empty()) {
    throw DataError("no " + std::string(to_string(pair.kind)) + " comparison example for " +
                    target.id);
  }
  const LabeledExample& other = *pool[rng.uniform_index(pool.size())];
  pair.views.second = build_prompt(spec, other, split, rng, ViewKind::kOriginal, config.demo_count);
  return pair;
}

std::string step_record_to_json(const StepRecord& r) {
  json j = {{"step", r.step},
            {"mlmLoss", r.mlm_loss},
            {"supconLoss", r.supcon_loss},
            {"totalLoss", r.total_loss},
            {"targetIds", r.target_ids},
            {"pairKinds", r.pair_kinds},
            {"demoIds", r.demo_ids},
            {"paraphraseDigest", r.paraphrase_digest},
            {"parameterVersion", r.parameter_version},
            {"digestAfterMlm", r.digest_after_mlm},
            {"digestAfterSupCon", r.digest_after_supcon},
            {"anchorsWithoutPositive", r.anchors_without_positive},
            {"degenerateParaphrases", r.degenerate_paraphrases}};
  return j.dump();
}

Trainer::Trainer(MaskedLm& model, const FewShotSplit& split, const TaskSpec& spec,
                 const Tokenizer& tokenizer, const AugmentationMap& augmentations,
                 TrainConfig config)
    : model_(&model),
      split_(&split),
      spec_(&spec),
      tokenizer_(&tokenizer),
      augmentations_(&augmentations),
      config_(std::move(config)),
      rng_(config_.seed),
      mlm_opt_(model),
      supcon_opt_(model),
      pool_(split.flat_train()) {
  config_.validate();
  if (pool_.empty()) throw DataError("training split is empty");
  order_.resize(pool_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  cursor_ = order_.size();  // forces a shuffle on first use
}

std::vector<LabeledExample> Trainer::next_targets(std::size_t count) {
  std::vector<LabeledExample> out;
  out.reserve(count);
  while (out.size() < count) {
    if (cursor_ == order_.size()) {
      rng_.shuffle(order_);
      cursor_ = 0;
    }
    out.push_back(pool_[order_[cursor_++]]);
  }
  return out;
}

StepRecord Trainer::step() {
  StepRecord rec;
  rec.step = steps_done_ + 1;
  const auto targets = next_targets(config_.mlm_batch());
  const std::size_t contrastive = std::min(config_.batch_size_supcon, targets.size());

  std::vector<Pair> pairs;
  pairs.reserve(targets.size());
  Sha256 para_digest;
  for (const auto& t : targets) {
    pairs.push_back(make_pair(t, *split_, *spec_, *augmentations_, config_, rng_));
    const auto& p = pairs.back();
    rec.target_ids.push_back(t.id);
    rec.pair_kinds.emplace_back(to_string(p.kind));
    rec.demo_ids.push_back(p.views.first.demo_ids);
    rec.demo_ids.push_back(p.views.second.demo_ids);
    if (p.kind == PairKind::kParaphrase) {
      para_digest.update(p.views.second.text);
      para_digest.update("\n", 1);
      if (p.views.degenerate_paraphrase) ++rec.degenerate_paraphrases;
    }
  }
  rec.paraphrase_digest = para_digest.hex_digest();

  // MLM phase on the first views.
  std::vector<ForwardPass> first;
  first.reserve(pairs.size());
  std::vector<Vector> logits;
  std::vector<std::string> labels;
  for (const auto& p : pairs) {
    first.push_back(model_->forward(tokenizer_->encode(p.views.first)));
    logits.push_back(first.back().output().mlm_logits);
    labels.push_back(p.views.first.label);
  }
  auto mlm = mlm_loss(logits, labels, *spec_, *tokenizer_);
  if (!std::isfinite(mlm.loss)) {
    throw NumericError("non-finite MLM loss at step " + std::to_string(rec.step));
  }
  auto grads = model_->make_gradients();
  for (std::size_t i = 0; i < first.size(); ++i) first[i].backward(&mlm.d_logits[i], nullptr, grads);
  mlm_opt_.step(*model_, grads, config_.lr_mlm);
  rec.mlm_loss = mlm.loss;
  rec.digest_after_mlm = model_->digest();

  if (config_.supcon_enabled) {
    // Contrastive phase: the first views' passes are reused, the second
    // views are forwarded now.
    std::vector<ForwardPass> second;
    second.reserve(contrastive);
    const auto d = static_cast<Eigen::Index>(model_->config().hidden_dim);
    Matrix features(static_cast<Eigen::Index>(2 * contrastive), d);
    std::vector<int> label_ids(2 * contrastive);
    for (std::size_t i = 0; i < contrastive; ++i) {
      second.push_back(model_->forward(tokenizer_->encode(pairs[i].views.second)));
      features.row(static_cast<Eigen::Index>(i)) = first[i].output().feature.transpose();
      features.row(static_cast<Eigen::Index>(contrastive + i)) =
          second.back().output().feature.transpose();
      label_ids[i] = static_cast<int>(spec_->label_index(pairs[i].views.first.label));
      label_ids[contrastive + i] = static_cast<int>(spec_->label_index(pairs[i].views.second.label));
    }
    grads.zero();
    ContrastiveBatch batch{normalize_rows(features), label_ids, config_.temperature};
    try {
      auto sc = supcon_loss(batch);
      if (!std::isfinite(sc.loss)) {
        throw NumericError("non-finite SupCon loss at step " + std::to_string(rec.step));
      }
      rec.supcon_loss = sc.loss;
      rec.anchors_without_positive = sc.anchors_without_positive;
      const Matrix d_h = normalize_rows_backward(features, sc.d_features * config_.supcon_weight);
      for (std::size_t i = 0; i < contrastive; ++i) {
        Vector g1 = d_h.row(static_cast<Eigen::Index>(i)).transpose();
        Vector g2 = d_h.row(static_cast<Eigen::Index>(contrastive + i)).transpose();
        first[i].backward(nullptr, &g1, grads);
        second[i].backward(nullptr, &g2, grads);
      }
    } catch (const DataError& e) {
      // Only a batch with no positive pair at all gets here.
      warn("step " + std::to_string(rec.step) + ": " + e.what() + "; contrastive update is zero");
      rec.anchors_without_positive = 2 * contrastive;
    }
    supcon_opt_.step(*model_, grads, config_.lr_supcon);
  }
  rec.digest_after_supcon = model_->digest();
  rec.total_loss = total_loss(rec.mlm_loss, rec.supcon_loss, config_.supcon_weight);
  rec.parameter_version = model_->version();
  ++steps_done_;
  return rec;
}

TrainingResult run_training(MaskedLm& model, const FewShotSplit& split, const TaskSpec& spec,
                            const Tokenizer& tokenizer, const AugmentationMap& augmentations,
                            const TrainConfig& config,
                            const std::optional<std::filesystem::path>& out_dir) {
  config.validate();
  TrainingResult result;
  std::ofstream log;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    log.open(*out_dir / "steps.jsonl");
    if (!log) throw DataError("cannot write step log in " + out_dir->string());
  }
  if (config.max_steps > 0) {
    Trainer trainer(model, split, spec, tokenizer, augmentations, config);
    for (std::size_t s = 0; s < config.max_steps; ++s) {
      result.records.push_back(trainer.step());
      if (log) log << step_record_to_json(result.records.back()) << '\n';
    }
  }
  if (out_dir) save_checkpoint(*out_dir / "checkpoint.bin", model);
  return result;
}

}  // namespace cppf
