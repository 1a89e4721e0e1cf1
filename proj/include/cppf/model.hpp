#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cppf/autograd.hpp"
#include "cppf/tokenizer.hpp"

namespace cppf {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 32;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t max_seq_len = 64;
  std::uint64_t init_seed = 1;
  bool tie_head = false;         // MLM decoder shares the token embedding
  bool projection_head = false;  // d x d projection before the contrastive feature
  double init_std = 0.02;

  std::size_t ffn_dim() const { return 4 * hidden_dim; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::string model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const std::string& text);

struct Parameter {
  std::string name;
  Matrix value;
};

struct ModelOutput {
  Matrix hidden_states;  // attention_length x d, after the final layer norm
  std::size_t mask_index = 0;
  Vector mask_hidden;    // == hidden_states.row(mask_index)
  Vector mlm_logits;     // vocab_size
  Vector feature;        // contrastive feature before normalization
};

/// A forward pass that keeps its tape so gradients can be pulled back
/// through it, possibly more than once.
class ForwardPass {
 public:
  const ModelOutput& output() const { return output_; }

  // Accumulates parameter gradients for the given upstream gradients of the
  // MLM logits and/or the contrastive feature.
  void backward(const Vector* d_logits, const Vector* d_feature, GradientSet& grads);

 private:
  friend class MaskedLm;
  Tape tape_;
  Var logits_;
  Var feature_;
  ModelOutput output_;
};

/// Pre-norm transformer encoder with an MLM head: token + position
/// embeddings, `layers` blocks of (LN, multi-head self-attention, residual,
/// LN, GELU feed-forward, residual), a final LN and a linear decoder.
class MaskedLm {
 public:
  explicit MaskedLm(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  std::optional<std::size_t> find_parameter(std::string_view name) const;

  ForwardPass forward(const TokenizedPrompt& prompt) const;
  GradientSet make_gradients() const;

  // Number of optimizer applications so far.
  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }
  void set_version(std::uint64_t v) { version_ = v; }
  std::uint64_t forward_count() const { return forward_count_.load(); }

  // SHA-256 over every parameter's bytes in declaration order.
  std::string digest() const;

  MaskedLm(const MaskedLm& other);
  MaskedLm& operator=(const MaskedLm& other);

 private:
  std::size_t add_param(std::string name, Matrix value);

  ModelConfig config_;
  std::vector<Parameter> params_;
  std::uint64_t version_ = 0;
  mutable std::atomic<std::uint64_t> forward_count_{0};
};

MaskedLm init_reference_model(const ModelConfig& config);

// Names of parameters the backward passes never reached.
std::vector<std::string> untouched_parameters(const MaskedLm& model, const GradientSet& grads);
// Throws Error listing parameters without a gradient path.
void require_all_touched(const MaskedLm& model, const GradientSet& grads);

}  // namespace cppf
