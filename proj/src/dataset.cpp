#include "cppf/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cppf/error.hpp"
#include "cppf/rng.hpp"
#include "json.hpp"

namespace cppf {

using nlohmann::json;

namespace {

json example_to_json(const LabeledExample& ex) {
  json j = {{"id", ex.id}, {"sentence1", ex.sentence1}};
  if (ex.sentence2) j["sentence2"] = *ex.sentence2;
  j["label"] = ex.label;
  return j;
}

LabeledExample example_from_json(const json& j, std::size_t line_no) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  LabeledExample ex;
  if (j.contains("id")) {
    const auto& id = j.at("id");
    ex.id = id.is_string() ? id.get<std::string>() : id.dump();
  } else {
    ex.id = "L" + std::to_string(line_no);
  }
  if (!j.contains("sentence1") || !j.at("sentence1").is_string()) {
    throw DataError("missing string field 'sentence1'");
  }
  ex.sentence1 = j.at("sentence1").get<std::string>();
  if (j.contains("sentence2") && !j.at("sentence2").is_null()) {
    if (!j.at("sentence2").is_string()) throw DataError("'sentence2' must be a string");
    ex.sentence2 = j.at("sentence2").get<std::string>();
  }
  if (!j.contains("label")) throw DataError("missing field 'label'");
  const auto& label = j.at("label");
  ex.label = label.is_string() ? label.get<std::string>() : label.dump();
  return ex;
}

}  // namespace

DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "jsonl" || s == "json-lines") return DatasetFormat::kJsonLines;
  throw ConfigError("unknown dataset format '" + std::string(s) + "'");
}

void validate_example(const LabeledExample& ex, const TaskSpec& task) {
  if (ex.sentence1.empty()) throw DataError("record " + ex.id + ": empty sentence1");
  if (!task.has_label(ex.label)) {
    throw DataError("record " + ex.id + ": unknown label '" + ex.label + "' for task " +
                    task.name());
  }
  if (task.has_second_slot() && (!ex.sentence2 || ex.sentence2->empty())) {
    throw DataError("record " + ex.id + ": task " + task.name() + " requires sentence2");
  }
  if (!task.has_second_slot() && ex.sentence2) {
    throw DataError("record " + ex.id + ": task " + task.name() + " takes no sentence2");
  }
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                         const TaskSpec& task) {
  if (format != DatasetFormat::kJsonLines) throw ConfigError("unsupported dataset format");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::vector<LabeledExample> out;
  std::set<std::string, std::less<>> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      auto ex = example_from_json(json::parse(line), line_no);
      validate_example(ex, task);
      if (!ids.insert(ex.id).second) throw DataError("duplicate id '" + ex.id + "'");
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw DataError(where + "malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset " + path.string());
  for (const auto& ex : examples) out << example_to_json(ex).dump() << '\n';
}

std::vector<LabeledExample> FewShotSplit::flat_train() const {
  std::vector<LabeledExample> out;
  for (const auto& [_, list] : train) out.insert(out.end(), list.begin(), list.end());
  return out;
}

std::size_t FewShotSplit::train_size() const {
  std::size_t n = 0;
  for (const auto& [_, list] : train) n += list.size();
  return n;
}

const LabeledExample* FewShotSplit::find_train(std::string_view id) const {
  for (const auto& [_, list] : train) {
    for (const auto& ex : list) {
      if (ex.id == id) return &ex;
    }
  }
  return nullptr;
}

FewShotSplit sample_few_shot(const std::vector<LabeledExample>& dataset, std::size_t k,
                             std::uint64_t seed, std::size_t dev_per_class,
                             const std::vector<std::string>& required_labels) {
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (const auto& l : required_labels) by_label[l];
  for (std::size_t i = 0; i < dataset.size(); ++i) by_label[dataset[i].label].push_back(i);

  FewShotSplit split;
  split.k = k;
  split.seed = seed;
  Rng rng(seed);
  std::vector<bool> taken(dataset.size(), false);
  for (auto& [label, indices] : by_label) {
    const std::size_t need = k + dev_per_class;
    if (indices.size() < need) {
      throw DataError("class '" + label + "' has " + std::to_string(indices.size()) +
                      " examples, need " + std::to_string(need) + " (K=" + std::to_string(k) +
                      ", dev=" + std::to_string(dev_per_class) + ")");
    }
    auto picks = rng.sample_indices(indices.size(), need);
    auto& train = split.train[label];
    for (std::size_t j = 0; j < picks.size(); ++j) {
      const auto idx = indices[picks[j]];
      taken[idx] = true;
      if (j < k) {
        train.push_back(dataset[idx]);
      } else {
        split.dev.push_back(dataset[idx]);
      }
    }
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!taken[i]) split.test.push_back(dataset[i]);
  }
  return split;
}

std::string split_to_json(const FewShotSplit& split) {
  json j;
  j["k"] = split.k;
  j["seed"] = split.seed;
  json train = json::object();
  for (const auto& [label, list] : split.train) {
    json arr = json::array();
    for (const auto& ex : list) arr.push_back(example_to_json(ex));
    train[label] = std::move(arr);
  }
  j["train"] = std::move(train);
  j["dev"] = json::array();
  for (const auto& ex : split.dev) j["dev"].push_back(example_to_json(ex));
  j["test"] = json::array();
  for (const auto& ex : split.test) j["test"].push_back(example_to_json(ex));
  return j.dump();
}

FewShotSplit split_from_json(const std::string& text) {
  FewShotSplit split;
  try {
    auto j = json::parse(text);
    split.k = j.at("k").get<std::size_t>();
    split.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [label, arr] : j.at("train").items()) {
      auto& list = split.train[label];
      for (const auto& e : arr) list.push_back(example_from_json(e, 0));
    }
    for (const auto& e : j.at("dev")) split.dev.push_back(example_from_json(e, 0));
    for (const auto& e : j.at("test")) split.test.push_back(example_from_json(e, 0));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed split: ") + e.what());
  }
  return split;
}

void save_split(const std::filesystem::path& path, const FewShotSplit& split) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split " + path.string());
  out << split_to_json(split) << '\n';
}

FewShotSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return split_from_json(ss.str());
}

}  // namespace cppf
