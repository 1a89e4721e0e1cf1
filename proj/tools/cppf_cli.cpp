// cppf-cli: few-shot prompt fine-tuning with contrastive paraphrase views.
//
// Subcommands: sample, augment, train, eval, experiment, compare, toy.
// Endpoint credentials come from CPPF_LLM_* environment variables and are
// only read when --live is given.

#include <fstream>
#include <iostream>
#include <iterator>

#include "CLI11.hpp"
#include "cppf/checkpoint.hpp"
#include "cppf/error.hpp"
#include "cppf/experiment.hpp"
#include "cppf/toy_task.hpp"

namespace fs = std::filesystem;
using namespace cppf;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

struct TaskArgs {
  std::string task;
  std::string task_file;

  void add(CLI::App* app) {
    app->add_option("--task", task, "Task name")->required();
    app->add_option("--task-file", task_file, "JSON Lines file with extra task definitions");
  }
  TaskSpec resolve() const {
    TaskRegistry registry;
    if (!task_file.empty()) registry.load_file(task_file);
    return registry.get(task);
  }
};

std::shared_ptr<LlmClient> live_client(bool live) {
  if (!live) return nullptr;
  return std::make_shared<HttpCompletionClient>(EndpointConfig::from_env());
}

// Trainer flags layered over a base config; unset flags keep the base value.
struct TrainOverrides {
  std::optional<std::size_t> max_steps;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr_mlm;
  std::optional<double> lr_supcon;
  std::optional<double> temperature;
  std::optional<std::string> pair_strategy;

  void add(CLI::App* app) {
    app->add_option("--max-steps", max_steps, "Training steps (at most 1000)");
    app->add_option("--batch-size", batch_size, "Contrastive batch size (pairs per step)");
    app->add_option("--lr-mlm", lr_mlm, "MLM learning rate");
    app->add_option("--lr-supcon", lr_supcon, "Contrastive learning rate (already scaled)");
    app->add_option("--temperature", temperature, "SupCon temperature");
    app->add_option("--pair-strategy", pair_strategy, "paraphrase | same-class | mixed");
  }
  void apply(TrainConfig& c) const {
    if (max_steps) c.max_steps = *max_steps;
    if (batch_size) c.batch_size_supcon = *batch_size;
    if (lr_mlm) c.lr_mlm = *lr_mlm;
    if (lr_supcon) c.lr_supcon = *lr_supcon;
    if (temperature) c.temperature = *temperature;
    if (pair_strategy) c.pair_strategy = parse_pair_strategy(*pair_strategy);
  }
};

std::vector<LabeledExample> split_examples(const FewShotSplit& split) {
  auto all = split.flat_train();
  all.insert(all.end(), split.dev.begin(), split.dev.end());
  all.insert(all.end(), split.test.begin(), split.test.end());
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot prompt fine-tuning with contrastive paraphrase views"};
  app.require_subcommand(1);

  // sample
  auto* sample = app.add_subcommand("sample", "Draw a K-shot split from a labeled dataset");
  TaskArgs sample_task;
  sample_task.add(sample);
  std::string sample_dataset, sample_out;
  std::size_t sample_k = kDefaultShots, sample_dev = 0;
  std::uint64_t sample_seed = 1;
  sample->add_option("--dataset", sample_dataset, "JSON Lines dataset")->required();
  sample->add_option("--k", sample_k, "Examples per class");
  sample->add_option("--dev-per-class", sample_dev, "Extra examples per class for dev");
  sample->add_option("--seed", sample_seed, "Sampling seed");
  sample->add_option("--out", sample_out, "Split JSON output")->required();

  // augment
  auto* augment = app.add_subcommand("augment", "Augment the training examples of a split");
  TaskArgs aug_task;
  aug_task.add(augment);
  std::string aug_split, aug_method = "lm-cppf", aug_out, aug_replay, aug_demos, aug_lexicon;
  std::uint64_t aug_seed = 1;
  int aug_demo_template = 0, aug_instruction = 0;
  std::size_t aug_concurrency = 1;
  bool aug_live = false;
  augment->add_option("--split", aug_split, "Split JSON")->required();
  augment->add_option("--method", aug_method, "lm-cppf | eda | bt-<AR|FR|DE|ZH|HI>");
  augment->add_option("--replay", aug_replay, "Completion fixture (JSON Lines)");
  augment->add_option("--demo-pairs", aug_demos, "Paraphrase demonstration pairs");
  augment->add_option("--lexicon", aug_lexicon, "Synonym lexicon for EDA");
  augment->add_option("--seed", aug_seed, "Augmentation seed");
  augment->add_option("--demo-template", aug_demo_template, "1..6, 0 draws per example");
  augment->add_option("--instruction", aug_instruction, "1..5, 0 for none");
  augment->add_option("--concurrency", aug_concurrency, "Parallel completion requests");
  augment->add_flag("--live", aug_live, "Send replay misses to the CPPF_LLM endpoint and record them");
  augment->add_option("--out", aug_out, "Augmentations output (JSON Lines)")->required();

  // train
  auto* train = app.add_subcommand("train", "Fine-tune a model on a split");
  TaskArgs train_task;
  train_task.add(train);
  std::string train_split, train_augs, train_out, train_config_path, train_model_path;
  std::uint64_t train_seed = 1;
  bool train_mlm_only = false;
  TrainOverrides train_over;
  train->add_option("--split", train_split, "Split JSON")->required();
  train->add_option("--augmentations", train_augs, "Augmentations (JSON Lines)");
  train->add_option("--config", train_config_path, "Trainer config JSON");
  train->add_option("--model-config", train_model_path, "Model config JSON");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_flag("--mlm-only", train_mlm_only, "Skip the contrastive phase");
  train_over.add(train);
  train->add_option("--out", train_out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on the test part of a split");
  TaskArgs eval_task;
  eval_task.add(eval);
  std::string eval_split, eval_ckpt, eval_vocab;
  std::uint64_t eval_seed = 1;
  std::size_t eval_demos = kDefaultDemoCount;
  eval->add_option("--split", eval_split, "Split JSON")->required();
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint.bin")->required();
  eval->add_option("--vocab", eval_vocab, "vocab.txt")->required();
  eval->add_option("--seed", eval_seed, "Demonstration sampling seed");
  eval->add_option("--demos", eval_demos, "Demonstrations per prompt");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Multi-seed train and evaluate");
  std::string exp_config, exp_task, exp_task_file, exp_method = "lm-cppf", exp_dataset, exp_replay,
                          exp_demos, exp_lexicon, exp_out = "out";
  std::vector<std::uint64_t> exp_seeds;
  std::optional<std::size_t> exp_k;
  bool exp_live = false, exp_fixed_split = false;
  TrainOverrides exp_over;
  experiment->add_option("--config", exp_config, "Experiment config JSON (flags override it)");
  experiment->add_option("--task", exp_task, "Task name");
  experiment->add_option("--task-file", exp_task_file, "Extra task definitions");
  experiment->add_option("--method", exp_method,
                         "lm-cppf | mlm-only | supcon-no-aug | eda | bt-<AR|FR|DE|ZH|HI>");
  experiment->add_option("--dataset", exp_dataset, "JSON Lines dataset");
  experiment->add_option("--seeds", exp_seeds, "Seeds (default 1 2 3 4 5)");
  experiment->add_option("--k", exp_k, "Examples per class");
  experiment->add_option("--replay", exp_replay, "Completion fixture");
  experiment->add_option("--demo-pairs", exp_demos, "Paraphrase demonstration pairs");
  experiment->add_option("--lexicon", exp_lexicon, "Synonym lexicon for EDA");
  experiment->add_option("--out", exp_out, "Output root");
  experiment->add_flag("--fixed-split", exp_fixed_split, "Use the first seed's split for all seeds");
  experiment->add_flag("--live", exp_live, "Send replay misses to the CPPF_LLM endpoint");
  exp_over.add(experiment);

  // compare
  auto* cmp = app.add_subcommand("compare", "Tabulate reports of one task");
  std::vector<std::string> cmp_reports;
  std::string cmp_csv;
  cmp->add_option("reports", cmp_reports, "report.json files")->required();
  cmp->add_option("--csv", cmp_csv, "Also write the table as CSV");

  // toy
  auto* toy_cmd = app.add_subcommand("toy", "Write the synthetic sentiment task and its fixtures");
  std::string toy_dir;
  std::vector<std::uint64_t> toy_seeds = {1, 2, 3, 4, 5};
  toy_cmd->add_option("--dir", toy_dir, "Output directory")->required();
  toy_cmd->add_option("--seeds", toy_seeds, "Seeds the replay fixture must cover");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) {
      const auto spec = sample_task.resolve();
      const auto data = load_dataset(sample_dataset, DatasetFormat::kJsonLines, spec);
      const auto split = sample_few_shot(data, sample_k, sample_seed, sample_dev, spec.labels());
      save_split(sample_out, split);
      std::cout << "train " << split.train_size() << ", dev " << split.dev.size() << ", test "
                << split.test.size() << '\n';
    } else if (*augment) {
      ExperimentConfig c;
      c.task = aug_task.task;
      c.method = parse_method(aug_method).name();
      if (!aug_task.task_file.empty()) c.task_file = aug_task.task_file;
      if (!aug_replay.empty()) c.replay_fixture = aug_replay;
      if (!aug_demos.empty()) c.demo_pairs = aug_demos;
      if (!aug_lexicon.empty()) c.lexicon = aug_lexicon;
      c.paraphrase.demo_template_id = aug_demo_template;
      if (aug_instruction != 0) c.paraphrase.instruction_template_id = aug_instruction;
      c.paraphrase.concurrency = aug_concurrency;
      const auto spec = aug_task.resolve();
      const auto split = load_split(aug_split);
      auto resources = load_resources(c, live_client(aug_live));
      const auto records = precompute_augmentations(c, spec, split, aug_seed, resources);
      save_augmentations(aug_out, records);
      if (aug_live && c.replay_fixture) resources.store->save(*c.replay_fixture);
      std::cout << records.size() << " augmentations written to " << aug_out << '\n';
    } else if (*train) {
      const auto spec = train_task.resolve();
      const auto split = load_split(train_split);
      std::vector<AugmentationRecord> augs;
      if (!train_augs.empty()) augs = load_augmentations(train_augs);
      TrainConfig tc = train_config_path.empty() ? TrainConfig::for_task(spec.name())
                                                 : train_config_from_json(read_text(train_config_path));
      tc.task = spec.name();
      tc.seed = train_seed;
      if (train_mlm_only) tc.supcon_enabled = false;
      train_over.apply(tc);
      ModelConfig mc = train_model_path.empty() ? ModelConfig{}
                                                : model_config_from_json(read_text(train_model_path));
      const auto vocab = experiment_vocabulary(split_examples(split), augs, spec);
      mc.vocab_size = vocab.size();
      const Tokenizer tokenizer(vocab, mc.max_seq_len);
      MaskedLm model(mc);
      fs::create_directories(train_out);
      vocab.save(fs::path(train_out) / "vocab.txt");
      write_text(fs::path(train_out) / "train_config.json", train_config_to_json(tc));
      const auto result = run_training(model, split, spec, tokenizer, to_augmentation_map(augs), tc,
                                       fs::path(train_out));
      if (!result.records.empty()) {
        const auto& last = result.records.back();
        std::cout << "steps " << result.records.size() << ", last mlm loss " << last.mlm_loss
                  << ", last supcon loss " << last.supcon_loss << '\n';
      }
      std::cout << "checkpoint " << model.digest() << '\n';
    } else if (*eval) {
      const auto spec = eval_task.resolve();
      const auto split = load_split(eval_split);
      const auto model = load_checkpoint(eval_ckpt);
      const Tokenizer tokenizer(Vocabulary::load(eval_vocab), model.config().max_seq_len);
      Rng rng(eval_seed);
      const double value = evaluate(model, split.test, split, spec, tokenizer, rng, eval_demos);
      std::cout << to_string(spec.metric()) << ' ' << value << '\n';
    } else if (*experiment) {
      ExperimentConfig c;
      if (!exp_config.empty()) {
        c = experiment_config_from_json(read_text(exp_config));
      } else {
        if (exp_task.empty()) throw ConfigError("--task or --config is required");
        c = ExperimentConfig::defaults(exp_task, exp_method);
      }
      if (!exp_task.empty()) c.task = exp_task;
      if (experiment->count("--method")) c.method = parse_method(exp_method).name();
      if (!exp_task_file.empty()) c.task_file = exp_task_file;
      if (!exp_dataset.empty()) c.dataset = exp_dataset;
      if (!exp_seeds.empty()) c.seeds = exp_seeds;
      if (exp_k) c.k = *exp_k;
      if (!exp_replay.empty()) c.replay_fixture = exp_replay;
      if (!exp_demos.empty()) c.demo_pairs = exp_demos;
      if (!exp_lexicon.empty()) c.lexicon = exp_lexicon;
      if (experiment->count("--out")) c.output_root = exp_out;
      if (exp_fixed_split) c.resample_per_seed = false;
      exp_over.apply(c.train);
      const auto report = run_experiment(c, live_client(exp_live));
      std::cout << report.task << ' ' << report.method << ' ' << report.metric << " mean "
                << report.mean << " std "
                << (report.std ? std::to_string(*report.std) : std::string("n/a")) << '\n'
                << "report " << (experiment_dir(c) / "report.json").string() << '\n'
                << "digest " << report_digest(report) << '\n';
    } else if (*cmp) {
      std::vector<Report> reports;
      for (const auto& p : cmp_reports) reports.push_back(load_report(p));
      const auto table = compare(reports);
      std::cout << table.to_text();
      if (!cmp_csv.empty()) write_text(cmp_csv, table.to_csv());
    } else if (*toy_cmd) {
      const auto f = toy::write_fixtures(toy_dir, toy_seeds);
      std::cout << "dataset " << f.dataset.string() << "\ntask " << f.task_file.string()
                << "\ndemo pairs " << f.demo_pairs.string() << "\nlexicon " << f.lexicon.string()
                << "\nreplay " << f.replay.string() << '\n';
      for (const std::string method : {"lm-cppf", "mlm-only", "supcon-no-aug", "eda", "bt-FR"}) {
        const auto path = fs::path(toy_dir) / ("experiment-" + method + ".json");
        write_text(path, experiment_config_to_json(
                             toy::experiment_config(f, method, fs::path(toy_dir) / "out", toy_seeds)));
        std::cout << "config " << path.string() << '\n';
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
