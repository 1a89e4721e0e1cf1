#pragma once

#include <optional>
#include <vector>

#include "cppf/task.hpp"

namespace cppf {

// Predictions and gold labels are label indices.
double accuracy(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& gold);

/// Multiclass Matthews correlation over a `num_classes` confusion matrix.
/// Returns 0 when the denominator vanishes (e.g. constant predictions).
double matthews_correlation(const std::vector<std::size_t>& predicted,
                            const std::vector<std::size_t>& gold, std::size_t num_classes);

double task_metric(Metric metric, const std::vector<std::size_t>& predicted,
                   const std::vector<std::size_t>& gold, std::size_t num_classes);

double mean(const std::vector<double>& values);
// n-1 denominator; nullopt for fewer than two values.
std::optional<double> sample_std(const std::vector<double>& values);

}  // namespace cppf
