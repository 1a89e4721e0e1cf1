#include "cppf/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "cppf/digest.hpp"
#include "cppf/eda.hpp"
#include "cppf/error.hpp"
#include "cppf/log.hpp"
#include "cppf/metrics.hpp"
#include "cppf/objectives.hpp"
#include "json.hpp"

namespace cppf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json optional_path(const std::optional<fs::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

std::optional<fs::path> path_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return fs::path(j.at(key).get<std::string>());
}

json paraphrase_options_json(const ParaphraseOptions& o) {
  return {{"demoTemplate", o.demo_template_id},
          {"instructionTemplate",
           o.instruction_template_id ? json(*o.instruction_template_id) : json(nullptr)},
          {"maxDemoPairs", o.max_demo_pairs},
          {"maxAttempts", o.max_attempts}};
}

// Everything that changes results; paths are replaced by content digests.
json behavior_json(const ExperimentConfig& c) {
  auto file_digest = [](const std::optional<fs::path>& p) {
    return p ? json(sha256_hex(read_file(*p))) : json(nullptr);
  };
  return {{"schemaVersion", kConfigSchemaVersion},
          {"task", c.task},
          {"method", c.method},
          {"seeds", c.seeds},
          {"k", c.k},
          {"resamplePerSeed", c.resample_per_seed},
          {"dataset", file_digest(c.dataset)},
          {"taskFile", file_digest(c.task_file)},
          {"replayFixture", file_digest(c.replay_fixture)},
          {"demoPairs", file_digest(c.demo_pairs)},
          {"lexicon", file_digest(c.lexicon)},
          {"model", json::parse(model_config_to_json(c.model))},
          {"train", json::parse(train_config_to_json(c.train))},
          {"paraphrase", paraphrase_options_json(c.paraphrase)},
          {"edaAlpha", c.eda_alpha},
          {"evalDemoCount", c.eval_demo_count}};
}

json report_json(const Report& r, bool with_runtime) {
  json j = {{"schemaVersion", kReportSchemaVersion},
            {"task", r.task},
            {"method", r.method},
            {"metric", r.metric},
            {"seeds", r.seeds},
            {"values", r.values},
            {"mean", r.mean},
            {"std", r.std ? json(*r.std) : json(nullptr)},
            {"configDigest", r.config_digest},
            {"checkpointDigests", r.checkpoint_digests}};
  if (with_runtime) j["runtimeSeconds"] = r.runtime_seconds;
  return j;
}

}  // namespace

std::string Method::name() const {
  switch (kind) {
    case MethodKind::kLmCppf: return "lm-cppf";
    case MethodKind::kMlmOnly: return "mlm-only";
    case MethodKind::kSupConNoAug: return "supcon-no-aug";
    case MethodKind::kEda: return "eda";
    case MethodKind::kBackTranslation: return "bt-" + std::string(pivot_code(*pivot));
  }
  return "unknown";
}

bool Method::needs_replay() const {
  return kind == MethodKind::kLmCppf || kind == MethodKind::kBackTranslation;
}

Method parse_method(std::string_view s) {
  if (s == "lm-cppf") return {MethodKind::kLmCppf, std::nullopt};
  if (s == "mlm-only") return {MethodKind::kMlmOnly, std::nullopt};
  if (s == "supcon-no-aug") return {MethodKind::kSupConNoAug, std::nullopt};
  if (s == "eda") return {MethodKind::kEda, std::nullopt};
  if (s.starts_with("bt-")) return {MethodKind::kBackTranslation, parse_pivot(s.substr(3))};
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

ExperimentConfig ExperimentConfig::defaults(const std::string& task, const std::string& method) {
  ExperimentConfig c;
  c.task = task;
  c.method = parse_method(method).name();
  c.train = TrainConfig::for_task(task);
  c.train.augmenter = c.method;
  return c;
}

void ExperimentConfig::validate() const {
  if (task.empty()) throw ConfigError("task is required");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (k == 0) throw ConfigError("k must be positive");
  if (dataset.empty()) throw ConfigError("dataset path is required");
  const Method m = parse_method(method);
  if (m.needs_replay() && !replay_fixture) {
    throw ConfigError("method " + method + " needs a replay fixture");
  }
  if (m.kind == MethodKind::kLmCppf && !demo_pairs) {
    throw ConfigError("method lm-cppf needs a demonstration-pair file");
  }
  if (m.kind == MethodKind::kEda && !lexicon) {
    throw ConfigError("method eda needs a synonym lexicon");
  }
  if (!(eda_alpha > 0.0 && eda_alpha <= 1.0)) throw ConfigError("eda_alpha must be in (0, 1]");
  train.validate();
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j = {{"schemaVersion", kConfigSchemaVersion},
            {"task", c.task},
            {"method", c.method},
            {"seeds", c.seeds},
            {"k", c.k},
            {"resamplePerSeed", c.resample_per_seed},
            {"dataset", c.dataset.string()},
            {"taskFile", optional_path(c.task_file)},
            {"replayFixture", optional_path(c.replay_fixture)},
            {"demoPairs", optional_path(c.demo_pairs)},
            {"lexicon", optional_path(c.lexicon)},
            {"outputRoot", c.output_root.string()},
            {"model", json::parse(model_config_to_json(c.model))},
            {"train", json::parse(train_config_to_json(c.train))},
            {"paraphrase", paraphrase_options_json(c.paraphrase)},
            {"edaAlpha", c.eda_alpha},
            {"evalDemoCount", c.eval_demo_count}};
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  try {
    auto j = json::parse(text);
    const int version = j.value("schemaVersion", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion) {
      throw ConfigError("unsupported config schema version " + std::to_string(version));
    }
    ExperimentConfig c;
    c.task = j.at("task").get<std::string>();
    c.method = j.at("method").get<std::string>();
    c.train = TrainConfig::for_task(c.task);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.k = j.value("k", kDefaultShots);
    c.resample_per_seed = j.value("resamplePerSeed", true);
    c.dataset = j.at("dataset").get<std::string>();
    c.task_file = path_from(j, "taskFile");
    c.replay_fixture = path_from(j, "replayFixture");
    c.demo_pairs = path_from(j, "demoPairs");
    c.lexicon = path_from(j, "lexicon");
    c.output_root = j.value("outputRoot", std::string("out"));
    if (j.contains("model")) c.model = model_config_from_json(j.at("model").dump());
    if (j.contains("train")) c.train = train_config_from_json(j.at("train").dump());
    if (j.contains("paraphrase")) {
      const auto& p = j.at("paraphrase");
      c.paraphrase.demo_template_id = p.value("demoTemplate", 0);
      if (p.contains("instructionTemplate") && !p.at("instructionTemplate").is_null()) {
        c.paraphrase.instruction_template_id = p.at("instructionTemplate").get<int>();
      }
      c.paraphrase.max_demo_pairs = p.value("maxDemoPairs", kMaxParaphraseDemos);
      c.paraphrase.max_attempts = p.value("maxAttempts", 3);
    }
    c.eda_alpha = j.value("edaAlpha", 0.1);
    c.eval_demo_count = j.value("evalDemoCount", kDefaultDemoCount);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

std::string config_digest(const ExperimentConfig& c) { return sha256_hex(behavior_json(c).dump()); }

TaskSpec resolve_task(const ExperimentConfig& c) {
  TaskRegistry registry;
  if (c.task_file) registry.load_file(*c.task_file);
  return registry.get(c.task);
}

std::string report_to_json(const Report& r) { return report_json(r, true).dump(2); }

Report report_from_json(const std::string& text) {
  try {
    auto j = json::parse(text);
    Report r;
    r.task = j.at("task").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.values = j.at("values").get<std::vector<double>>();
    r.mean = j.at("mean").get<double>();
    if (!j.at("std").is_null()) r.std = j.at("std").get<double>();
    r.config_digest = j.at("configDigest").get<std::string>();
    r.checkpoint_digests = j.value("checkpointDigests", std::vector<std::string>{});
    r.runtime_seconds = j.value("runtimeSeconds", 0.0);
    if (r.values.size() != r.seeds.size()) throw DataError("report has one value per seed");
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

Report load_report(const fs::path& path) { return report_from_json(read_file(path)); }

std::string report_digest(const Report& r) { return sha256_hex(report_json(r, false).dump()); }

std::vector<std::size_t> predict(const MaskedLm& model, const std::vector<LabeledExample>& examples,
                                 const FewShotSplit& split, const TaskSpec& spec,
                                 const Tokenizer& tokenizer, Rng& rng, std::size_t demo_count) {
  const auto ids = verbalizer_ids(spec, tokenizer);
  std::vector<std::size_t> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const auto view = build_prompt(spec, ex, split, rng, ViewKind::kOriginal, demo_count);
    const auto pass = model.forward(tokenizer.encode(view));
    out.push_back(class_probabilities(pass.output().mlm_logits, spec, ids).argmax());
  }
  return out;
}

double evaluate(const MaskedLm& model, const std::vector<LabeledExample>& test,
                const FewShotSplit& split, const TaskSpec& spec, const Tokenizer& tokenizer,
                Rng& rng, std::size_t demo_count) {
  if (test.empty()) throw DataError("test set is empty");
  const auto predicted = predict(model, test, split, spec, tokenizer, rng, demo_count);
  std::vector<std::size_t> gold;
  gold.reserve(test.size());
  for (const auto& ex : test) gold.push_back(spec.label_index(ex.label));
  return task_metric(spec.metric(), predicted, gold, spec.labels().size());
}

Vocabulary experiment_vocabulary(const std::vector<LabeledExample>& examples,
                                 const std::vector<AugmentationRecord>& augmentations,
                                 const TaskSpec& spec) {
  std::vector<std::string> texts;
  texts.reserve(2 * examples.size() + augmentations.size());
  for (const auto& ex : examples) {
    texts.push_back(ex.sentence1);
    if (ex.sentence2) texts.push_back(*ex.sentence2);
  }
  for (const auto& a : augmentations) texts.push_back(a.augmented_text);
  std::string frame = spec.template_text();
  for (auto slot : {kFirstSlot, kSecondSlot}) {
    if (auto pos = frame.find(slot); pos != std::string::npos) frame.replace(pos, slot.size(), " ");
  }
  std::vector<std::string> extra = {frame};
  for (const auto& w : spec.verbalizer_words()) extra.push_back(w);
  return Vocabulary::build(texts, extra);
}

AugmentationMap to_augmentation_map(const std::vector<AugmentationRecord>& records) {
  AugmentationMap out;
  for (const auto& r : records) out.emplace(r.original_id, r.augmented_text);
  return out;
}

AugmentationResources load_resources(const ExperimentConfig& c, std::shared_ptr<LlmClient> live) {
  AugmentationResources res;
  res.store = std::make_shared<ReplayStore>(c.replay_fixture && fs::exists(*c.replay_fixture)
                                                ? ReplayStore::load(*c.replay_fixture)
                                                : ReplayStore{});
  if (c.replay_fixture && !fs::exists(*c.replay_fixture) && !live) {
    throw DataError("replay fixture " + c.replay_fixture->string() + " does not exist");
  }
  res.llm = std::move(live);
  if (c.demo_pairs) res.demo_pairs = load_demo_pairs(*c.demo_pairs);
  if (c.lexicon) res.lexicon = SynonymLexicon::load(*c.lexicon);
  return res;
}

std::vector<AugmentationRecord> precompute_augmentations(const ExperimentConfig& c,
                                                         const TaskSpec& spec,
                                                         const FewShotSplit& split,
                                                         std::uint64_t seed,
                                                         AugmentationResources& resources) {
  const Method m = parse_method(c.method);
  const auto train = split.flat_train();
  // Offset keeps augmentation draws apart from the split and trainer streams.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<AugmentationRecord> out;
  switch (m.kind) {
    case MethodKind::kMlmOnly:
    case MethodKind::kSupConNoAug:
      return out;
    case MethodKind::kLmCppf: {
      ReplayClient client(resources.store, resources.llm);
      return paraphrase_examples(client, train, spec.name(), resources.demo_pairs, c.paraphrase,
                                 rng);
    }
    case MethodKind::kBackTranslation: {
      auto client = std::make_shared<ReplayClient>(resources.store, resources.llm);
      LlmTranslationClient translator(client, c.paraphrase.max_attempts);
      for (const auto& ex : train) out.push_back(back_translate_example(translator, ex, *m.pivot));
      return out;
    }
    case MethodKind::kEda:
      for (const auto& ex : train) {
        const auto params = EdaParams::from_alpha(ex.sentence1, c.eda_alpha);
        auto res = eda_all(ex.sentence1, params, resources.lexicon, rng);
        AugmentationRecord r;
        r.original_id = ex.id;
        r.original_text = ex.sentence1;
        r.augmented_text = res.text.empty() ? ex.sentence1 : res.text;
        r.method = AugMethod::kEdaAll;
        r.meta["op"] = std::to_string(static_cast<int>(res.op));
        out.push_back(std::move(r));
      }
      return out;
  }
  return out;
}

std::size_t record_replay(const ExperimentConfig& c, std::shared_ptr<LlmClient> live,
                          const fs::path& out) {
  if (!live) throw ConfigError("recording needs a live completion client");
  ExperimentConfig rc = c;
  rc.replay_fixture = out;
  const TaskSpec spec = resolve_task(rc);
  const auto dataset = load_dataset(rc.dataset, DatasetFormat::kJsonLines, spec);
  auto resources = load_resources(rc, std::move(live));
  for (std::uint64_t seed : rc.seeds) {
    precompute_augmentations(rc, spec, seed_split(rc, dataset, spec, seed), seed, resources);
  }
  resources.store->save(out);
  return resources.store->size();
}

FewShotSplit seed_split(const ExperimentConfig& c, const std::vector<LabeledExample>& dataset,
                        const TaskSpec& spec, std::uint64_t seed) {
  const std::uint64_t split_seed = c.resample_per_seed ? seed : c.seeds.front();
  return sample_few_shot(dataset, c.k, split_seed, 0, spec.labels());
}

TrainConfig seed_train_config(const ExperimentConfig& c, std::uint64_t seed) {
  TrainConfig t = c.train;
  t.task = c.task;
  t.seed = seed;
  t.augmenter = c.method;
  switch (parse_method(c.method).kind) {
    case MethodKind::kMlmOnly:
      t.supcon_enabled = false;
      t.pair_strategy = PairStrategy::kSameClass;
      break;
    case MethodKind::kSupConNoAug:
      t.supcon_enabled = true;
      t.pair_strategy = PairStrategy::kSameClass;
      break;
    default:
      t.supcon_enabled = true;
      break;
  }
  return t;
}

fs::path experiment_dir(const ExperimentConfig& c) {
  return c.output_root / c.task / c.method / config_digest(c).substr(0, 16);
}

Report run_experiment(const ExperimentConfig& c, std::shared_ptr<LlmClient> live) {
  const auto started = std::chrono::steady_clock::now();
  c.validate();
  const TaskSpec spec = resolve_task(c);
  const auto dataset = load_dataset(c.dataset, DatasetFormat::kJsonLines, spec);
  auto resources = load_resources(c, live);

  Report report;
  report.task = c.task;
  report.method = c.method;
  report.metric = std::string(to_string(spec.metric()));
  report.config_digest = config_digest(c);
  const fs::path dir = c.output_root / c.task / c.method / report.config_digest.substr(0, 16);
  fs::create_directories(dir);
  write_file(dir / "config.json", experiment_config_to_json(c));

  for (std::uint64_t seed : c.seeds) {
    const fs::path seed_dir = dir / ("seed-" + std::to_string(seed));
    fs::create_directories(seed_dir);
    const FewShotSplit split = seed_split(c, dataset, spec, seed);
    const auto augs = precompute_augmentations(c, spec, split, seed, resources);
    save_augmentations(seed_dir / "augmentations.jsonl", augs);

    const Vocabulary vocab = experiment_vocabulary(dataset, augs, spec);
    vocab.save(seed_dir / "vocab.txt");
    ModelConfig mc = c.model;
    mc.vocab_size = vocab.size();
    const Tokenizer tokenizer(vocab, mc.max_seq_len);
    MaskedLm model(mc);
    const auto aug_map = to_augmentation_map(augs);
    run_training(model, split, spec, tokenizer, aug_map, seed_train_config(c, seed), seed_dir);

    Rng eval_rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
    report.seeds.push_back(seed);
    report.values.push_back(
        evaluate(model, split.test, split, spec, tokenizer, eval_rng, c.eval_demo_count));
    report.checkpoint_digests.push_back(model.digest());
  }
  report.mean = mean(report.values);
  report.std = sample_std(report.values);
  if (live && resources.store->size() > 0) resources.store->save(dir / "recorded-replay.jsonl");
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_file(dir / "report.json", report_to_json(report));
  return report;
}

Comparison compare(const std::vector<Report>& reports) {
  if (reports.empty()) throw DataError("nothing to compare");
  for (const auto& r : reports) {
    if (r.task != reports.front().task) {
      throw DataError("cannot compare reports of different tasks (" + reports.front().task +
                      ", " + r.task + ")");
    }
  }
  return {reports.front().task, reports};
}

namespace {

// Display width of UTF-8 text: continuation bytes take no column.
std::size_t columns(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace

std::string Comparison::to_text() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].mean > rows[best].mean) best = i;
  }
  std::vector<std::array<std::string, 3>> cells;
  cells.push_back({"method", rows.front().metric, "seeds"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::string m = fixed(r.mean, 4);
    if (i == best) m = "**" + m + "**";
    m += " ± " + (r.std ? fixed(*r.std, 4) : std::string("n/a"));
    cells.push_back({r.method, m, std::to_string(r.seeds.size())});
  }
  std::array<std::size_t, 3> width{};
  for (const auto& row : cells) {
    for (std::size_t k = 0; k < 3; ++k) width[k] = std::max(width[k], columns(row[k]));
  }
  std::ostringstream out;
  out << "task: " << task << '\n';
  for (const auto& row : cells) {
    for (std::size_t k = 0; k < 3; ++k) {
      out << row[k];
      if (k < 2) out << std::string(width[k] - columns(row[k]), ' ') << " | ";
    }
    out << '\n';
  }
  return out.str();
}

std::string Comparison::to_csv() const {
  std::ostringstream out;
  out << "task,method,mean,std,n_seeds\n";
  for (const auto& r : rows) {
    out << r.task << ',' << r.method << ',' << fixed(r.mean, 6) << ','
        << (r.std ? fixed(*r.std, 6) : std::string()) << ',' << r.seeds.size() << '\n';
  }
  return out.str();
}

}  // namespace cppf
