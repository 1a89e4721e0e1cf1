#include "cppf/metrics.hpp"

#include <cmath>
#include <numeric>

#include "cppf/error.hpp"

namespace cppf {

namespace {

void check_sizes(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& gold) {
  if (predicted.size() != gold.size()) throw DataError("predictions and labels differ in length");
  if (gold.empty()) throw DataError("cannot score an empty set");
}

}  // namespace

double accuracy(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& gold) {
  check_sizes(predicted, gold);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predicted[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double matthews_correlation(const std::vector<std::size_t>& predicted,
                            const std::vector<std::size_t>& gold, std::size_t num_classes) {
  check_sizes(predicted, gold);
  std::vector<double> pred_count(num_classes, 0.0), true_count(num_classes, 0.0);
  double correct = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] >= num_classes || gold[i] >= num_classes) {
      throw DataError("label index out of range");
    }
    pred_count[predicted[i]] += 1.0;
    true_count[gold[i]] += 1.0;
    correct += predicted[i] == gold[i];
  }
  const double s = static_cast<double>(gold.size());
  double pt = 0.0, pp = 0.0, tt = 0.0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    pt += pred_count[k] * true_count[k];
    pp += pred_count[k] * pred_count[k];
    tt += true_count[k] * true_count[k];
  }
  const double denom = std::sqrt(s * s - pp) * std::sqrt(s * s - tt);
  if (denom == 0.0) return 0.0;
  return (correct * s - pt) / denom;
}

double task_metric(Metric metric, const std::vector<std::size_t>& predicted,
                   const std::vector<std::size_t>& gold, std::size_t num_classes) {
  switch (metric) {
    case Metric::kAccuracy: return accuracy(predicted, gold);
    case Metric::kMatthewsCorrelation: return matthews_correlation(predicted, gold, num_classes);
  }
  throw ConfigError("unknown metric");
}

double mean(const std::vector<double>& values) {
  if (values.empty()) throw DataError("mean of an empty list");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::optional<double> sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return std::nullopt;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace cppf
