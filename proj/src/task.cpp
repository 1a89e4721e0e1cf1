#include "cppf/task.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "cppf/error.hpp"
#include "json.hpp"

namespace cppf {

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::map<std::string, TaskSpec, std::less<>> make_builtins() {
  std::map<std::string, TaskSpec, std::less<>> out;
  auto put = [&](TaskSpec spec) { out.emplace(spec.name(), std::move(spec)); };
  put(TaskSpec::make("SST-2", "<S1> It was [MASK] .",
                     {{"positive", "great"}, {"negative", "terrible"}}, Metric::kAccuracy));
  put(TaskSpec::make("SST-5", "<S1> It was [MASK] .",
                     {{"v.positive", "great"},
                      {"positive", "good"},
                      {"neutral", "okay"},
                      {"negative", "bad"},
                      {"v.negative", "terrible"}},
                     Metric::kAccuracy));
  put(TaskSpec::make("MNLI", "<S1> ? [MASK] , <S2>",
                     {{"entailment", "Yes"}, {"neutral", "Maybe"}, {"contradiction", "No"}},
                     Metric::kAccuracy));
  put(TaskSpec::make("CoLA", "<S1> This is [MASK] .",
                     {{"grammatical", "correct"}, {"not_grammatical", "incorrect"}},
                     Metric::kMatthewsCorrelation));
  put(TaskSpec::make("QNLI", "<S1> ? [MASK] , <S2>",
                     {{"entailment", "Yes"}, {"not_entailment", "No"}}, Metric::kAccuracy));
  put(TaskSpec::make("CR", "<S1> It was [MASK] .",
                     {{"positive", "great"}, {"negative", "terrible"}}, Metric::kAccuracy));
  return out;
}

const std::map<std::string, TaskSpec, std::less<>>& builtins() {
  static const auto table = make_builtins();
  return table;
}

}  // namespace

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kAccuracy:
      return "accuracy";
    case Metric::kMatthewsCorrelation:
      return "matthews-correlation";
  }
  return "unknown";
}

Metric parse_metric(std::string_view s) {
  if (s == "accuracy") return Metric::kAccuracy;
  if (s == "matthews-correlation" || s == "mcc") return Metric::kMatthewsCorrelation;
  throw ConfigError("unknown metric '" + std::string(s) + "'");
}

TaskSpec TaskSpec::make(std::string name, std::string template_text,
                        std::vector<std::pair<std::string, std::string>> label_words,
                        Metric metric) {
  if (name.empty()) throw ConfigError("task name must be nonempty");
  if (count_occurrences(template_text, kMaskToken) != 1) {
    throw ConfigError("task " + name + ": template must contain exactly one [MASK]");
  }
  if (count_occurrences(template_text, kFirstSlot) != 1) {
    throw ConfigError("task " + name + ": template must contain exactly one <S1>");
  }
  if (count_occurrences(template_text, kSecondSlot) > 1) {
    throw ConfigError("task " + name + ": template has more than one <S2>");
  }
  if (label_words.empty()) throw ConfigError("task " + name + ": empty label space");

  TaskSpec spec;
  spec.name_ = std::move(name);
  spec.template_ = std::move(template_text);
  spec.metric_ = metric;
  std::set<std::string, std::less<>> words;
  for (auto& [label, word] : label_words) {
    if (label.empty() || word.empty()) {
      throw ConfigError("task " + spec.name_ + ": empty label or verbalizer");
    }
    if (word.find_first_of(" \t\n") != std::string::npos) {
      throw ConfigError("task " + spec.name_ + ": verbalizer '" + word + "' is not a single word");
    }
    if (!words.insert(word).second) {
      throw ConfigError("task " + spec.name_ + ": verbalizer '" + word + "' used twice");
    }
    if (!spec.verbalizers_.emplace(label, word).second) {
      throw ConfigError("task " + spec.name_ + ": duplicate label '" + label + "'");
    }
    spec.labels_.push_back(std::move(label));
  }
  return spec;
}

bool TaskSpec::has_second_slot() const { return template_.find(kSecondSlot) != std::string::npos; }

bool TaskSpec::has_label(std::string_view label) const { return verbalizers_.contains(label); }

std::size_t TaskSpec::label_index(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw DataError("task " + name_ + ": unknown label '" + std::string(label) + "'");
  }
  return static_cast<std::size_t>(it - labels_.begin());
}

const std::string& TaskSpec::verbalizer(std::string_view label) const {
  auto it = verbalizers_.find(label);
  if (it == verbalizers_.end()) {
    throw DataError("task " + name_ + ": no verbalizer for label '" + std::string(label) + "'");
  }
  return it->second;
}

std::vector<std::string> TaskSpec::verbalizer_words() const {
  std::vector<std::string> out;
  out.reserve(labels_.size());
  for (const auto& l : labels_) out.push_back(verbalizers_.find(l)->second);
  return out;
}

TaskRegistry::TaskRegistry() : tasks_(builtins()) {}

const TaskSpec& TaskRegistry::get(std::string_view name) const {
  auto it = tasks_.find(name);
  if (it == tasks_.end()) throw ConfigError("unknown task '" + std::string(name) + "'");
  return it->second;
}

bool TaskRegistry::contains(std::string_view name) const { return tasks_.contains(name); }

void TaskRegistry::add(TaskSpec spec) {
  if (builtins().contains(spec.name())) {
    throw ConfigError("cannot redefine built-in task '" + spec.name() + "'");
  }
  auto name = spec.name();
  tasks_.insert_or_assign(std::move(name), std::move(spec));
}

std::size_t TaskRegistry::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open task file " + path.string());
  std::string line;
  std::size_t line_no = 0, added = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      add(task_from_json_text(line));
    } catch (const Error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    ++added;
  }
  return added;
}

std::vector<std::string> TaskRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tasks_) out.push_back(name);
  return out;
}

const TaskSpec& get_task(std::string_view name) {
  auto it = builtins().find(name);
  if (it == builtins().end()) throw ConfigError("unknown task '" + std::string(name) + "'");
  return it->second;
}

const std::vector<std::string>& builtin_task_names() {
  static const std::vector<std::string> names = {"SST-2", "SST-5", "MNLI", "CoLA", "QNLI", "CR"};
  return names;
}

TaskSpec task_from_json_text(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed task JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("name") || !j.contains("template") ||
      !j.contains("verbalizers")) {
    throw DataError("task JSON needs name, template and verbalizers");
  }
  std::vector<std::pair<std::string, std::string>> label_words;
  const auto& v = j.at("verbalizers");
  try {
    if (v.is_array()) {
      for (const auto& pair : v) {
        label_words.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      }
    } else if (v.is_object()) {
      if (j.contains("labels")) {
        for (const auto& l : j.at("labels")) {
          auto label = l.get<std::string>();
          if (!v.contains(label)) throw DataError("label '" + label + "' has no verbalizer");
          label_words.emplace_back(label, v.at(label).get<std::string>());
        }
        if (label_words.size() != v.size()) {
          throw DataError("verbalizers name labels missing from 'labels'");
        }
      } else {
        for (const auto& [label, word] : v.items()) {
          label_words.emplace_back(label, word.get<std::string>());
        }
      }
    } else {
      throw DataError("verbalizers must be an object or an array of pairs");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad verbalizers: ") + e.what());
  }
  Metric metric = Metric::kAccuracy;
  if (j.contains("metric")) metric = parse_metric(j.at("metric").get<std::string>());
  return TaskSpec::make(j.at("name").get<std::string>(), j.at("template").get<std::string>(),
                        std::move(label_words), metric);
}

}  // namespace cppf
