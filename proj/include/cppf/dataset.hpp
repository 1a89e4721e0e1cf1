#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cppf/task.hpp"

namespace cppf {

struct LabeledExample {
  std::string id;
  std::string sentence1;
  std::optional<std::string> sentence2;
  std::string label;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

enum class DatasetFormat { kJsonLines };

DatasetFormat parse_dataset_format(std::string_view s);

/// Reads a dataset and validates every record against `task`.
///
/// JSON Lines records are {id, sentence1, sentence2?, label}. A record
/// without an id gets "L<line>" so ids stay stable for a given file. Errors
/// carry the file name and 1-based line number.
std::vector<LabeledExample> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                         const TaskSpec& task);

void save_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples);

// Checks one example against the task's label space and slot layout.
void validate_example(const LabeledExample& ex, const TaskSpec& task);

struct FewShotSplit {
  std::map<std::string, std::vector<LabeledExample>> train;  // label -> K examples
  std::vector<LabeledExample> dev;
  std::vector<LabeledExample> test;
  std::size_t k = 0;
  std::uint64_t seed = 0;

  // Train examples in label order, then sample order within a label.
  std::vector<LabeledExample> flat_train() const;
  std::size_t train_size() const;
  const LabeledExample* find_train(std::string_view id) const;

  friend bool operator==(const FewShotSplit&, const FewShotSplit&) = default;
};

/// Draws exactly `k` training examples per class without replacement.
///
/// Classes are the labels present in `dataset` (plus `required_labels`, which
/// must each be present). `dev_per_class` further examples per class go to
/// dev; everything not drawn is test, in dataset order.
FewShotSplit sample_few_shot(const std::vector<LabeledExample>& dataset, std::size_t k,
                             std::uint64_t seed, std::size_t dev_per_class = 0,
                             const std::vector<std::string>& required_labels = {});

std::string split_to_json(const FewShotSplit& split);
FewShotSplit split_from_json(const std::string& text);
void save_split(const std::filesystem::path& path, const FewShotSplit& split);
FewShotSplit load_split(const std::filesystem::path& path);

}  // namespace cppf
