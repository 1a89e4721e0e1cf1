#include "cppf/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cppf/error.hpp"

namespace cppf {

std::vector<int> verbalizer_ids(const TaskSpec& spec, const Tokenizer& tokenizer) {
  std::vector<int> ids;
  for (const auto& word : spec.verbalizer_words()) ids.push_back(tokenizer.single_token_id(word));
  return ids;
}

double LabelDistribution::at(std::string_view label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw DataError("unknown label '" + std::string(label) + "'");
  return probs[static_cast<std::size_t>(it - labels.begin())];
}

std::size_t LabelDistribution::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

LabelDistribution class_probabilities(const Vector& logits_at_mask, const TaskSpec& spec,
                                      const std::vector<int>& ids) {
  LabelDistribution dist;
  dist.labels = spec.labels();
  dist.probs.resize(ids.size());
  double m = -std::numeric_limits<double>::infinity();
  for (int id : ids) {
    if (id < 0 || id >= logits_at_mask.size()) throw DataError("verbalizer id out of range");
    m = std::max(m, logits_at_mask(id));
  }
  if (!std::isfinite(m)) throw NumericError("non-finite verbalizer logits");
  double z = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    dist.probs[i] = std::exp(logits_at_mask(ids[i]) - m);
    z += dist.probs[i];
  }
  for (auto& p : dist.probs) p /= z;
  return dist;
}

LabelDistribution class_probabilities(const Vector& logits_at_mask, const TaskSpec& spec,
                                      const Tokenizer& tokenizer) {
  return class_probabilities(logits_at_mask, spec, verbalizer_ids(spec, tokenizer));
}

MlmLossResult mlm_loss(const std::vector<Vector>& logits, const std::vector<std::string>& labels,
                       const TaskSpec& spec, const Tokenizer& tokenizer) {
  if (logits.size() != labels.size()) throw DataError("mlm_loss: logits/labels size mismatch");
  const auto ids = verbalizer_ids(spec, tokenizer);
  MlmLossResult out;
  out.d_logits.reserve(logits.size());
  for (std::size_t b = 0; b < logits.size(); ++b) {
    const auto dist = class_probabilities(logits[b], spec, ids);
    const auto y = spec.label_index(labels[b]);
    out.loss -= std::log(dist.probs[y]);
    Vector d = Vector::Zero(logits[b].size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      d(ids[i]) = dist.probs[i] - (i == y ? 1.0 : 0.0);
    }
    out.d_logits.push_back(std::move(d));
  }
  return out;
}

SupConResult supcon_loss(const ContrastiveBatch& batch) {
  const auto& z = batch.features;
  const auto n = z.rows();
  if (n < 2) throw DataError("supcon: batch needs at least two features");
  if (static_cast<std::size_t>(n) != batch.labels.size()) {
    throw DataError("supcon: features/labels size mismatch");
  }
  if (!(batch.temperature > 0.0)) throw DataError("supcon: temperature must be positive");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(z.row(i).norm() - 1.0) > 1e-6) {
      throw DataError("supcon: feature row " + std::to_string(i) + " is not unit-norm");
    }
  }

  const double inv_t = 1.0 / batch.temperature;
  const Matrix sim = (z * z.transpose()) * inv_t;
  SupConResult out;
  out.d_features = Matrix::Zero(n, z.cols());
  Matrix coeff = Matrix::Zero(n, n);  // dL/dsim
  std::size_t anchors_with_positive = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Eigen::Index> positives;
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == i) continue;
      m = std::max(m, sim(i, a));
      if (batch.labels[static_cast<std::size_t>(a)] == batch.labels[static_cast<std::size_t>(i)]) {
        positives.push_back(a);
      }
    }
    if (positives.empty()) {
      ++out.anchors_without_positive;
      continue;
    }
    ++anchors_with_positive;
    double z_sum = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a != i) z_sum += std::exp(sim(i, a) - m);
    }
    const double log_z = m + std::log(z_sum);
    const double inv_p = 1.0 / static_cast<double>(positives.size());
    for (auto p : positives) out.loss -= inv_p * (sim(i, p) - log_z);
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a != i) coeff(i, a) += std::exp(sim(i, a) - log_z);
    }
    for (auto p : positives) coeff(i, p) -= inv_p;
  }
  if (anchors_with_positive == 0) {
    throw DataError("supcon: no anchor in the batch has a positive");
  }
  // sim(i,a) = z_i.z_a / t, so dz = (C + C^T) z / t.
  out.d_features = ((coeff + coeff.transpose()) * z) * inv_t;
  return out;
}

Matrix normalize_rows(const Matrix& h) {
  Matrix out(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    const double norm = h.row(i).norm();
    if (!(norm > 0.0)) throw NumericError("cannot normalize a zero feature vector");
    out.row(i) = h.row(i) / norm;
  }
  return out;
}

Matrix normalize_rows_backward(const Matrix& h, const Matrix& d_normalized) {
  Matrix out(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    const double norm = h.row(i).norm();
    const RowVector zi = h.row(i) / norm;
    out.row(i) = (d_normalized.row(i) - zi * zi.dot(d_normalized.row(i))) / norm;
  }
  return out;
}

double total_loss(double mlm, double supcon, double supcon_weight) {
  if (!std::isfinite(mlm) || !std::isfinite(supcon) || !std::isfinite(supcon_weight)) {
    throw NumericError("total_loss: non-finite input");
  }
  return mlm + supcon_weight * supcon;
}

}  // namespace cppf
