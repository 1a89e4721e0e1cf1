#include "cppf/paraphrase.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <future>

#include "cppf/error.hpp"
#include "cppf/log.hpp"
#include "json.hpp"

namespace cppf {

using nlohmann::json;

namespace {

struct DemoTemplate {
  std::string_view head;    // precedes the original text
  std::string_view middle;  // between original and paraphrase
};

constexpr std::array<DemoTemplate, kDemoTemplateCount> kDemoTemplates = {{
    {"Original:", "\nParaphrase:"},
    {"[Original]:", "\n[Paraphrase]:"},
    {"Original:", "\nRewrite:"},
    {"[Original]:", "\n[Rewrite]:"},
    {"Here is the original source: ", "\nHere is the paraphrase: "},
    {"", ", in other words "},
}};

constexpr std::array<std::string_view, 9> kEchoKeywords = {
    "[Original]:", "[Paraphrase]:", "[Rewrite]:", "Original:", "Paraphrase:", "Rewrite:",
    "Here is the original source:", "Here is the paraphrase:", ", in other words",
};

const DemoTemplate& demo_template(int id) {
  if (id < 1 || id > kDemoTemplateCount) {
    throw ConfigError("unknown demonstration template id " + std::to_string(id));
  }
  return kDemoTemplates[static_cast<std::size_t>(id - 1)];
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

}  // namespace

std::string_view to_string(AugMethod m) {
  switch (m) {
    case AugMethod::kParaphraseLlm: return "paraphrase-llm";
    case AugMethod::kBtAr: return "bt-AR";
    case AugMethod::kBtFr: return "bt-FR";
    case AugMethod::kBtDe: return "bt-DE";
    case AugMethod::kBtZh: return "bt-ZH";
    case AugMethod::kBtHi: return "bt-HI";
    case AugMethod::kEdaSr: return "eda-sr";
    case AugMethod::kEdaRi: return "eda-ri";
    case AugMethod::kEdaRs: return "eda-rs";
    case AugMethod::kEdaRd: return "eda-rd";
    case AugMethod::kEdaAll: return "eda-all";
  }
  return "unknown";
}

AugMethod parse_aug_method(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(AugMethod::kEdaAll); ++i) {
    auto m = static_cast<AugMethod>(i);
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown augmentation method '" + std::string(s) + "'");
}

std::string augmentation_record_to_json(const AugmentationRecord& r) {
  json j = {{"originalId", r.original_id},
            {"originalText", r.original_text},
            {"augmentedText", r.augmented_text},
            {"method", to_string(r.method)},
            {"meta", r.meta}};
  return j.dump();
}

AugmentationRecord augmentation_record_from_json(const std::string& line) {
  try {
    auto j = json::parse(line);
    AugmentationRecord r;
    r.original_id = j.at("originalId").get<std::string>();
    r.original_text = j.at("originalText").get<std::string>();
    r.augmented_text = j.at("augmentedText").get<std::string>();
    r.method = parse_aug_method(j.at("method").get<std::string>());
    if (j.contains("meta")) r.meta = j.at("meta").get<std::map<std::string, std::string>>();
    if (r.augmented_text.empty()) throw DataError("empty augmentedText for " + r.original_id);
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed augmentation record: ") + e.what());
  }
}

void save_augmentations(const std::filesystem::path& path,
                        const std::vector<AugmentationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << augmentation_record_to_json(r) << '\n';
}

std::vector<AugmentationRecord> load_augmentations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<AugmentationRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(augmentation_record_from_json(line));
  }
  return out;
}

const std::string& instruction_template(int id) {
  static const std::array<std::string, kInstructionTemplateCount> kInstructions = {
      "Summarize the following text in your own words",
      "Rewrite the following text that expresses the same idea in a different way",
      "Generate a paraphrase of the following text that expresses the same ideas in a different "
      "way",
      "Generate a paraphrase of the following text using different words and sentence structures "
      "while still conveying the same meaning",
      "Generate a summary or paraphrase of the following text that captures the essence of the "
      "ideas in a concise manner",
  };
  if (id < 1 || id > kInstructionTemplateCount) {
    throw ConfigError("unknown instruction template id " + std::to_string(id));
  }
  return kInstructions[static_cast<std::size_t>(id - 1)];
}

std::string render_demo_pair(int id, const std::string& original, const std::string& paraphrase) {
  const auto& t = demo_template(id);
  std::string out(t.head);
  out += original;
  out += t.middle;
  out += paraphrase;
  return out;
}

std::string render_open_query(int id, const std::string& query) {
  const auto& t = demo_template(id);
  std::string out(t.head);
  out += query;
  out += t.middle;
  return rtrim(std::move(out));
}

std::string build_paraphrase_prompt(const std::vector<TextPair>& demo_pairs,
                                    const std::string& query, int demo_template_id,
                                    std::optional<int> instruction_template_id) {
  demo_template(demo_template_id);  // validates the id
  if (query.empty()) throw DataError("paraphrase query is empty");
  if (demo_pairs.empty() && !instruction_template_id) {
    throw ConfigError("a paraphrase prompt without demonstrations needs an instruction");
  }
  std::string out;
  if (instruction_template_id) {
    out += instruction_template(*instruction_template_id);
    out += '\n';
  }
  for (const auto& [original, para] : demo_pairs) {
    out += render_demo_pair(demo_template_id, original, para);
    out += '\n';
  }
  out += render_open_query(demo_template_id, query);
  return out;
}

std::string clean_completion(const std::string& raw) {
  std::string s = trim(raw);
  if (auto nl = s.find('\n'); nl != std::string::npos) s.resize(nl);
  std::size_t cut = s.size();
  for (auto kw : kEchoKeywords) cut = std::min(cut, s.find(kw));
  s.resize(cut);
  return trim(s);
}

std::string paraphrase(LlmClient& client, const std::string& prompt, int max_attempts) {
  auto text = clean_completion(complete_with_retries(client, prompt, max_attempts));
  if (text.empty()) {
    throw Error("empty completion for prompt digest " + prompt_digest(prompt));
  }
  return text;
}

std::vector<DemoPairRecord> load_demo_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open demo-pair fixture " + path.string());
  std::vector<DemoPairRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      out.push_back({j.at("taskName").get<std::string>(), j.at("label").get<std::string>(),
                     j.at("original").get<std::string>(), j.at("paraphrase").get<std::string>()});
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed demo pair: " + e.what());
    }
  }
  return out;
}

void save_demo_pairs(const std::filesystem::path& path, const std::vector<DemoPairRecord>& pairs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : pairs) {
    json j = {{"taskName", p.task},
              {"label", p.label},
              {"original", p.original},
              {"paraphrase", p.paraphrase}};
    out << j.dump() << '\n';
  }
}

std::vector<TextPair> select_demo_pairs(const std::vector<DemoPairRecord>& pool,
                                        const std::string& task, const std::string& label,
                                        const std::string& query, std::size_t max_pairs) {
  std::vector<TextPair> out;
  for (const auto& p : pool) {
    if (out.size() >= max_pairs) break;
    if (p.task == task && p.label == label && p.original != query) {
      out.emplace_back(p.original, p.paraphrase);
    }
  }
  return out;
}

std::vector<AugmentationRecord> paraphrase_examples(LlmClient& client,
                                                    const std::vector<LabeledExample>& examples,
                                                    const std::string& task,
                                                    const std::vector<DemoPairRecord>& demo_pool,
                                                    const ParaphraseOptions& options, Rng& rng) {
  struct Job {
    std::string prompt;
    int demo_template = 0;
  };
  std::vector<Job> jobs;
  jobs.reserve(examples.size());
  for (const auto& ex : examples) {
    Job job;
    job.demo_template = options.demo_template_id != 0
                            ? options.demo_template_id
                            : 1 + static_cast<int>(rng.uniform_index(kDemoTemplateCount));
    auto pairs = select_demo_pairs(demo_pool, task, ex.label, ex.sentence1, options.max_demo_pairs);
    job.prompt = build_paraphrase_prompt(pairs, ex.sentence1, job.demo_template,
                                         options.instruction_template_id);
    jobs.push_back(std::move(job));
  }

  std::vector<std::string> completions(jobs.size());
  const std::size_t width = std::max<std::size_t>(1, options.concurrency);
  for (std::size_t start = 0; start < jobs.size(); start += width) {
    const std::size_t stop = std::min(jobs.size(), start + width);
    if (width == 1) {
      completions[start] = paraphrase(client, jobs[start].prompt, options.max_attempts);
      continue;
    }
    std::vector<std::future<std::string>> inflight;
    for (std::size_t i = start; i < stop; ++i) {
      inflight.push_back(std::async(std::launch::async, [&, i] {
        return paraphrase(client, jobs[i].prompt, options.max_attempts);
      }));
    }
    for (std::size_t i = start; i < stop; ++i) completions[i] = inflight[i - start].get();
  }

  std::vector<AugmentationRecord> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    AugmentationRecord r;
    r.original_id = examples[i].id;
    r.original_text = examples[i].sentence1;
    r.augmented_text = completions[i];
    r.method = AugMethod::kParaphraseLlm;
    r.meta["endpoint"] = client.endpoint();
    r.meta["demoTemplate"] = std::to_string(jobs[i].demo_template);
    r.meta["instructionTemplate"] = options.instruction_template_id
                                        ? std::to_string(*options.instruction_template_id)
                                        : "none";
    r.meta["promptDigest"] = prompt_digest(jobs[i].prompt);
    if (r.augmented_text == r.original_text) {
      warn("paraphrase of " + r.original_id + " is identical to the original");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cppf
