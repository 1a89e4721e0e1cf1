#include "cppf/toy_task.hpp"

#include <array>
#include <fstream>

#include "cppf/back_translation.hpp"
#include "cppf/error.hpp"
#include "cppf/rng.hpp"
#include "json.hpp"

namespace cppf::toy {

namespace {

using WordPair = std::pair<std::string_view, std::string_view>;

constexpr std::array<WordPair, 6> kPositive = {{{"wonderful", "marvelous"},
                                                {"superb", "splendid"},
                                                {"delightful", "charming"},
                                                {"brilliant", "dazzling"},
                                                {"enjoyable", "pleasant"},
                                                {"fantastic", "terrific"}}};
constexpr std::array<WordPair, 6> kNegative = {{{"awful", "dreadful"},
                                                {"boring", "tedious"},
                                                {"horrible", "atrocious"},
                                                {"dull", "bland"},
                                                {"clumsy", "sloppy"},
                                                {"painful", "miserable"}}};
constexpr std::array<WordPair, 6> kSubjects = {{{"movie", "film"},
                                               {"story", "plot"},
                                               {"acting", "performances"},
                                               {"script", "dialogue"},
                                               {"ending", "finale"},
                                               {"soundtrack", "score"}}};

// {s}/{t} are subjects, {a}/{b} sentiment words.
constexpr std::array<std::string_view, 6> kFrames = {
    "the {s} was {a} .",
    "the {s} was {a} and the {t} was {b} .",
    "i thought the {s} felt {a} overall .",
    "honestly , the {s} seemed {a} to me .",
    "a {a} {s} with a {b} {t} .",
    "we watched it twice and the {s} stayed {a} .",
};

// Paraphrase demonstrations; none of these sentences is in the dataset.
constexpr std::array<std::pair<std::string_view, std::string_view>, 6> kDemoSentences = {{
    {"positive", "my friends said the movie was wonderful ."},
    {"positive", "by the end the story felt superb ."},
    {"positive", "every scene of the acting was delightful ."},
    {"negative", "my friends said the movie was awful ."},
    {"negative", "by the end the story felt boring ."},
    {"negative", "every scene of the acting was horrible ."},
}};

constexpr std::array<std::string_view, 3> kQueryHeads = {"Here is the original source: ",
                                                       "[Original]:", "Original:"};
constexpr std::string_view kInOtherWords = ", in other words";

std::string_view pick(const std::array<WordPair, 6>& table, Rng& rng) {
  const auto& p = table[rng.uniform_index(table.size())];
  return rng.bernoulli(0.5) ? p.first : p.second;
}

void replace_all(std::string& s, std::string_view key, std::string_view value) {
  for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
    s.replace(pos, key.size(), value);
  }
}

std::string partner(std::string_view word) {
  for (const auto* table : {&kPositive, &kNegative, &kSubjects}) {
    for (const auto& [a, b] : *table) {
      if (word == a) return std::string(b);
      if (word == b) return std::string(a);
    }
  }
  return std::string(word);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto nl = text.find('\n', start);
    out.push_back(text.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return out;
}

}  // namespace

TaskSpec task_spec() { return task_from_json_text(task_json()); }

std::string task_json() {
  nlohmann::json j = {{"name", kTaskName},
                      {"template", "<S1> It was [MASK] ."},
                      {"verbalizers", {{"positive", "great"}, {"negative", "terrible"}}},
                      {"metric", "accuracy"}};
  return j.dump();
}

std::vector<LabeledExample> make_dataset(const DataOptions& options) {
  Rng rng(options.seed);
  const std::size_t per_class = options.shots + options.test_size / 2;
  std::vector<LabeledExample> out;
  out.reserve(2 * per_class);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (const auto* label : {"positive", "negative"}) {
      const auto& words = std::string_view(label) == "positive" ? kPositive : kNegative;
      std::string s(kFrames[rng.uniform_index(kFrames.size())]);
      const auto subj = pick(kSubjects, rng);
      auto other = pick(kSubjects, rng);
      while (other == subj) other = pick(kSubjects, rng);
      const auto a = pick(words, rng);
      auto b = pick(words, rng);
      while (b == a) b = pick(words, rng);
      replace_all(s, "{s}", subj);
      replace_all(s, "{t}", other);
      replace_all(s, "{a}", a);
      replace_all(s, "{b}", b);
      out.push_back({"toy-" + std::to_string(out.size()), s, std::nullopt, label});
    }
  }
  return out;
}

SynonymLexicon lexicon() {
  SynonymLexicon lex;
  for (const auto* table : {&kPositive, &kNegative, &kSubjects}) {
    for (const auto& [a, b] : *table) {
      lex.add(std::string(a), {std::string(b)});
      lex.add(std::string(b), {std::string(a)});
    }
  }
  return lex;
}

void save_lexicon(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto* table : {&kPositive, &kNegative, &kSubjects}) {
    for (const auto& [a, b] : *table) {
      out << a << ' ' << b << '\n' << b << ' ' << a << '\n';
    }
  }
}

std::string rule_paraphrase(std::string_view text) {
  auto words = split_words(text);
  for (auto& w : words) w = partner(w);
  return join_words(words);
}

std::optional<std::string> paraphrase_query(const std::string& prompt) {
  auto lines = lines_of(prompt);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) return std::nullopt;
  const std::string& last = lines.back();
  if (last.ends_with(kInOtherWords)) {
    return trim(std::string_view(last).substr(0, last.size() - kInOtherWords.size()));
  }
  if (lines.size() < 2) return std::nullopt;
  const std::string& query = lines[lines.size() - 2];
  for (auto head : kQueryHeads) {
    if (query.starts_with(head)) return trim(std::string_view(query).substr(head.size()));
  }
  return std::nullopt;
}

std::string SynonymParaphraseClient::complete(const std::string& prompt) {
  constexpr std::string_view kTranslate = "Translate the following ";
  if (prompt.starts_with(kTranslate)) {
    const auto lines = lines_of(prompt);
    const auto to = lines.front().find(" text to ");
    if (lines.size() < 2 || to == std::string::npos) throw DataError("malformed translation prompt");
    const std::string source = lines.front().substr(kTranslate.size(), to - kTranslate.size());
    std::string target = lines.front().substr(to + 9);
    if (!target.empty() && target.back() == '.') target.pop_back();
    const std::string text = trim(std::string_view(lines[1]).substr(source.size() + 1));
    return target == "English" ? rule_paraphrase(text) : text;
  }
  auto query = paraphrase_query(prompt);
  if (!query) throw DataError("not a paraphrase prompt");
  return " " + rule_paraphrase(*query) + "\n";
}

std::vector<DemoPairRecord> demo_pairs() {
  std::vector<DemoPairRecord> out;
  for (const auto& [label, sentence] : kDemoSentences) {
    out.push_back({std::string(kTaskName), std::string(label), std::string(sentence),
                   rule_paraphrase(sentence)});
  }
  return out;
}

TrainConfig train_config() {
  TrainConfig c;
  c.task = std::string(kTaskName);
  c.batch_size_supcon = 8;
  c.lr_mlm = 1e-3;
  c.lr_supcon = scaled_supcon_lr(1e-3);
  c.max_steps = 120;
  return c;
}

ExperimentConfig experiment_config(const Fixtures& fixtures, const std::string& method,
                                   const std::filesystem::path& output_root,
                                   const std::vector<std::uint64_t>& seeds) {
  ExperimentConfig c;
  c.task = std::string(kTaskName);
  c.method = parse_method(method).name();
  c.seeds = seeds;
  c.dataset = fixtures.dataset;
  c.task_file = fixtures.task_file;
  const Method m = parse_method(method);
  if (m.needs_replay()) c.replay_fixture = fixtures.replay;
  if (m.kind == MethodKind::kLmCppf) c.demo_pairs = fixtures.demo_pairs;
  if (m.kind == MethodKind::kEda) c.lexicon = fixtures.lexicon;
  c.output_root = output_root;
  c.train = train_config();
  c.train.augmenter = c.method;
  return c;
}

Fixtures write_fixtures(const std::filesystem::path& dir, const std::vector<std::uint64_t>& seeds,
                        const DataOptions& options) {
  std::filesystem::create_directories(dir);
  Fixtures f{dir / "dataset.jsonl", dir / "task.jsonl", dir / "demo_pairs.jsonl",
             dir / "lexicon.txt", dir / "replay.jsonl"};
  save_dataset(f.dataset, make_dataset(options));
  {
    std::ofstream out(f.task_file);
    if (!out) throw DataError("cannot write " + f.task_file.string());
    out << task_json() << '\n';
  }
  save_demo_pairs(f.demo_pairs, demo_pairs());
  save_lexicon(f.lexicon);
  std::filesystem::remove(f.replay);
  auto live = std::make_shared<SynonymParaphraseClient>();
  for (const std::string method : {"lm-cppf", "bt-AR", "bt-FR", "bt-DE", "bt-ZH", "bt-HI"}) {
    auto c = experiment_config(f, method, dir / "unused", seeds);
    c.k = options.shots;
    record_replay(c, live, f.replay);
  }
  return f;
}

}  // namespace cppf::toy
