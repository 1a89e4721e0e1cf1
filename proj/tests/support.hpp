#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.
// Oracles deliberately use plain loops over std::vector, not the library's
// Eigen code paths.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "cppf/dataset.hpp"
#include "cppf/experiment.hpp"
#include "cppf/model.hpp"
#include "cppf/objectives.hpp"
#include "cppf/prompt.hpp"
#include "cppf/tokenizer.hpp"
#include "cppf/toy_task.hpp"
#include "cppf/trainer.hpp"

namespace cppf::testing {

inline std::string golden(const std::string& name) {
  std::ifstream in(std::filesystem::path(CPPF_GOLDEN_DIR) / name, std::ios::binary);
  std::string s{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

inline std::vector<std::string> golden_lines(const std::string& name) {
  std::vector<std::string> out;
  std::ifstream in(std::filesystem::path(CPPF_GOLDEN_DIR) / name);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cppf-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// The toy task at unit-test size, with rule paraphrases for every train id.
struct ToySetup {
  TaskSpec spec = toy::task_spec();
  std::vector<LabeledExample> dataset;
  FewShotSplit split;
  Vocabulary vocab;
  ModelConfig model_config;
  AugmentationMap augmentations;

  Tokenizer tokenizer() const { return Tokenizer(vocab, model_config.max_seq_len); }
};

inline ToySetup make_toy_setup(std::uint64_t seed = 1, std::size_t k = kDefaultShots) {
  ToySetup s;
  toy::DataOptions opts;
  opts.shots = k;
  opts.test_size = 40;
  s.dataset = toy::make_dataset(opts);
  s.split = sample_few_shot(s.dataset, k, seed);
  std::vector<AugmentationRecord> augs;
  for (const auto& ex : s.split.flat_train()) {
    AugmentationRecord r;
    r.original_id = ex.id;
    r.original_text = ex.sentence1;
    r.augmented_text = toy::rule_paraphrase(ex.sentence1);
    augs.push_back(r);
  }
  s.augmentations = to_augmentation_map(augs);
  s.vocab = experiment_vocabulary(s.dataset, augs, s.spec);
  s.model_config.vocab_size = s.vocab.size();
  return s;
}

// ---- SupCon oracle -------------------------------------------------------

using Rows = std::vector<std::vector<double>>;

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Direct transcription of the summed "out" formulation: O(N^2) loops,
// no log-sum-exp shift.
inline double brute_force_supcon(const Rows& z, const std::vector<int>& labels, double tau) {
  const std::size_t n = z.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double denom = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a != i) denom += std::exp(dot(z[i], z[a]) / tau);
    }
    std::size_t positives = 0;
    double sum = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      if (p == i || labels[p] != labels[i]) continue;
      ++positives;
      sum += std::log(std::exp(dot(z[i], z[p]) / tau) / denom);
    }
    if (positives > 0) total += -sum / static_cast<double>(positives);
  }
  return total;
}

inline Rows random_unit_rows(std::size_t n, std::size_t d, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Rows rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    double norm = 0.0;
    for (auto& x : r) {
      x = normal(gen);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : r) x /= norm;
  }
  return rows;
}

inline Matrix to_matrix(const Rows& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

// ---- Restricted-softmax oracle ---------------------------------------------

// Softmax over the whole vocabulary, then renormalized on `ids`.
inline std::vector<double> restricted_full_softmax(const std::vector<double>& logits,
                                                   const std::vector<int>& ids) {
  double m = -std::numeric_limits<double>::infinity();
  for (double l : logits) m = std::max(m, l);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
  for (auto& x : p) x /= z;
  std::vector<double> out;
  double mass = 0.0;
  for (int id : ids) mass += p[static_cast<std::size_t>(id)];
  for (int id : ids) out.push_back(p[static_cast<std::size_t>(id)] / mass);
  return out;
}

// ---- Finite-difference gradient checks ------------------------------------

enum class LossKind { kMlm, kSupCon, kTotal };

struct GradCheckBatch {
  std::vector<TokenizedPrompt> prompts;  // pairs: (2i, 2i+1) are two views
  std::vector<std::string> labels;       // per prompt
};

inline GradCheckBatch grad_check_batch(const ToySetup& s, std::uint64_t seed) {
  const auto tok = s.tokenizer();
  Rng rng(seed);
  TrainConfig tc;
  GradCheckBatch b;
  const auto train = s.split.flat_train();
  for (std::size_t i : {std::size_t{0}, train.size() - 1, std::size_t{1}}) {
    const auto pair = make_pair(train[i], s.split, s.spec, s.augmentations, tc, rng);
    b.prompts.push_back(tok.encode(pair.views.first));
    b.prompts.push_back(tok.encode(pair.views.second));
    b.labels.push_back(pair.views.first.label);
    b.labels.push_back(pair.views.second.label);
  }
  return b;
}

inline std::vector<int> label_ids(const TaskSpec& spec, const std::vector<std::string>& labels) {
  std::vector<int> out;
  for (const auto& l : labels) out.push_back(static_cast<int>(spec.label_index(l)));
  return out;
}

// Loss value and, if `grads` is set, its analytic gradient.
inline double loss_and_grad(const MaskedLm& model, const GradCheckBatch& b, const TaskSpec& spec,
                            const Tokenizer& tok, LossKind kind, GradientSet* grads) {
  std::vector<ForwardPass> passes;
  for (const auto& p : b.prompts) passes.push_back(model.forward(p));
  double loss = 0.0;
  std::vector<Vector> d_logits(passes.size());
  std::vector<Vector> d_feature(passes.size());
  if (kind != LossKind::kSupCon) {
    std::vector<Vector> logits;
    for (const auto& p : passes) logits.push_back(p.output().mlm_logits);
    auto r = mlm_loss(logits, b.labels, spec, tok);
    loss += r.loss;
    d_logits = r.d_logits;
  }
  if (kind != LossKind::kMlm) {
    Matrix h(static_cast<Eigen::Index>(passes.size()), model.config().hidden_dim);
    for (std::size_t i = 0; i < passes.size(); ++i) {
      h.row(static_cast<Eigen::Index>(i)) = passes[i].output().feature.transpose();
    }
    ContrastiveBatch cb{normalize_rows(h), label_ids(spec, b.labels), kDefaultTemperature};
    auto r = supcon_loss(cb);
    loss += r.loss;
    const Matrix dh = normalize_rows_backward(h, r.d_features);
    for (std::size_t i = 0; i < passes.size(); ++i) {
      d_feature[i] = dh.row(static_cast<Eigen::Index>(i)).transpose();
    }
  }
  if (grads) {
    for (std::size_t i = 0; i < passes.size(); ++i) {
      passes[i].backward(d_logits[i].size() ? &d_logits[i] : nullptr,
                         d_feature[i].size() ? &d_feature[i] : nullptr, *grads);
    }
  }
  return loss;
}

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t below_floor = 0;  // entries where both gradients are under the floor
  double max_rel_error = 0.0;
  std::string worst;
};

/// Central differences on `count` entries drawn across all parameter tensors.
/// The relative error is |a - n| / max(|a|, |n|, floor). Attention key biases
/// are skipped: their exact gradient is zero, so both sides are round-off.
inline GradCheckResult finite_difference_check(MaskedLm& model, const GradCheckBatch& b,
                                               const TaskSpec& spec, const Tokenizer& tok,
                                               LossKind kind, std::size_t count,
                                               std::uint64_t seed, double eps = 1e-4,
                                               double floor = 1e-8) {
  auto grads = model.make_gradients();
  loss_and_grad(model, b, spec, tok, kind, &grads);
  std::mt19937_64 gen(seed);
  auto& params = model.parameters();
  GradCheckResult res;
  for (std::size_t n = 0; n < count; ++n) {
    std::size_t pi = n < params.size() ? n : gen() % params.size();
    while (params[pi].name.ends_with("attn.bk")) pi = gen() % params.size();
    auto& value = params[pi].value;
    const auto r = static_cast<Eigen::Index>(gen() % static_cast<std::uint64_t>(value.rows()));
    const auto c = static_cast<Eigen::Index>(gen() % static_cast<std::uint64_t>(value.cols()));
    const double saved = value(r, c);
    value(r, c) = saved + eps;
    const double up = loss_and_grad(model, b, spec, tok, kind, nullptr);
    value(r, c) = saved - eps;
    const double down = loss_and_grad(model, b, spec, tok, kind, nullptr);
    value(r, c) = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double analytic = grads[pi](r, c);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    const double rel = std::abs(analytic - numeric) / scale;
    ++res.checked;
    if (scale == floor) ++res.below_floor;
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst = params[pi].name + "(" + std::to_string(r) + "," + std::to_string(c) +
                  ") analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
    }
  }
  return res;
}

// ---- Metrics oracle --------------------------------------------------------

inline double binary_mcc(double tp, double tn, double fp, double fn) {
  const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  return den == 0.0 ? 0.0 : (tp * tn - fp * fn) / den;
}

}  // namespace cppf::testing
