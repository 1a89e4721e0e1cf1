#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cppf {

inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kFirstSlot = "<S1>";
inline constexpr std::string_view kSecondSlot = "<S2>";

enum class Metric { kAccuracy, kMatthewsCorrelation };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// A classification task: its prompt template, label space and label words.
///
/// Construct through `TaskSpec::make`, which enforces that the template has
/// exactly one mask and a <S1> slot, and that the verbalizer map is a
/// bijection from the label space onto distinct words. Labels keep their
/// declaration order; that order is the order of every per-label vector.
class TaskSpec {
 public:
  static TaskSpec make(std::string name, std::string template_text,
                       std::vector<std::pair<std::string, std::string>> label_words,
                       Metric metric);

  const std::string& name() const { return name_; }
  const std::string& template_text() const { return template_; }
  const std::vector<std::string>& labels() const { return labels_; }
  Metric metric() const { return metric_; }

  bool has_second_slot() const;
  bool has_label(std::string_view label) const;
  std::size_t label_index(std::string_view label) const;
  const std::string& verbalizer(std::string_view label) const;
  std::vector<std::string> verbalizer_words() const;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;

 private:
  TaskSpec() = default;

  std::string name_;
  std::string template_;
  std::vector<std::string> labels_;
  std::map<std::string, std::string, std::less<>> verbalizers_;
  Metric metric_ = Metric::kAccuracy;
};

/// Name -> TaskSpec lookup, pre-populated with the six built-in tasks.
class TaskRegistry {
 public:
  TaskRegistry();

  const TaskSpec& get(std::string_view name) const;
  bool contains(std::string_view name) const;
  // Adds or replaces a task. Built-in names may not be replaced.
  void add(TaskSpec spec);
  // Registers every task in a JSON Lines task file; returns how many.
  std::size_t load_file(const std::filesystem::path& path);
  std::vector<std::string> names() const;

 private:
  std::map<std::string, TaskSpec, std::less<>> tasks_;
};

// Lookup in the built-in task table.
const TaskSpec& get_task(std::string_view name);

const std::vector<std::string>& builtin_task_names();

// Parses one task object: {name, template, labels?, verbalizers, metric?}.
// `verbalizers` is either an object or an ordered array of [label, word].
TaskSpec task_from_json_text(std::string_view json_text);

}  // namespace cppf
