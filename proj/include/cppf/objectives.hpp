#pragma once

#include <string>
#include <vector>

#include "cppf/autograd.hpp"
#include "cppf/task.hpp"
#include "cppf/tokenizer.hpp"

namespace cppf {

inline constexpr double kDefaultTemperature = 0.3;

// Vocabulary id of each label's verbalizer, in label order.
std::vector<int> verbalizer_ids(const TaskSpec& spec, const Tokenizer& tokenizer);

/// Distribution over a task's labels, aligned with `labels`.
struct LabelDistribution {
  std::vector<std::string> labels;
  std::vector<double> probs;

  double at(std::string_view label) const;
  std::size_t argmax() const;
};

/// Softmax of the MLM logits restricted to the verbalizer ids.
LabelDistribution class_probabilities(const Vector& logits_at_mask, const TaskSpec& spec,
                                      const Tokenizer& tokenizer);
LabelDistribution class_probabilities(const Vector& logits_at_mask, const TaskSpec& spec,
                                      const std::vector<int>& verbalizer_token_ids);

struct MlmLossResult {
  double loss = 0.0;
  std::vector<Vector> d_logits;  // gradient w.r.t. each example's full logit vector
};

/// Sum over the batch of -log p(label | prompt).
MlmLossResult mlm_loss(const std::vector<Vector>& logits, const std::vector<std::string>& labels,
                       const TaskSpec& spec, const Tokenizer& tokenizer);

struct ContrastiveBatch {
  Matrix features;          // N x d, unit rows
  std::vector<int> labels;  // N
  double temperature = kDefaultTemperature;
};

struct SupConResult {
  double loss = 0.0;
  Matrix d_features;  // N x d
  std::size_t anchors_without_positive = 0;
};

/// Supervised contrastive loss, summed over anchors:
///   sum_i -1/|P(i)| sum_{p in P(i)} log( exp(z_i.z_p/t) / sum_{a != i} exp(z_i.z_a/t) )
/// with P(i) the other rows sharing row i's label. Anchors without a
/// positive contribute zero; a batch where no anchor has one is an error.
SupConResult supcon_loss(const ContrastiveBatch& batch);

// Row-wise L2 normalization and its backward.
Matrix normalize_rows(const Matrix& h);
Matrix normalize_rows_backward(const Matrix& h, const Matrix& d_normalized);

double total_loss(double mlm, double supcon, double supcon_weight = 1.0);

}  // namespace cppf
