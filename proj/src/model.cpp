#include "cppf/model.hpp"

#include <numeric>

#include "cppf/digest.hpp"
#include "cppf/error.hpp"
#include "cppf/rng.hpp"
#include "json.hpp"

namespace cppf {

void ModelConfig::validate() const {
  if (vocab_size < 5) throw ConfigError("vocab_size must cover the five special tokens");
  if (hidden_dim == 0 || layers == 0 || heads == 0) {
    throw ConfigError("hidden_dim, layers and heads must be positive");
  }
  if (hidden_dim % heads != 0) {
    throw ConfigError("hidden_dim " + std::to_string(hidden_dim) + " is not divisible by heads " +
                      std::to_string(heads));
  }
  if (max_seq_len < 3) throw ConfigError("max_seq_len must be at least 3");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
}

std::string model_config_to_json(const ModelConfig& c) {
  nlohmann::json j = {{"vocabSize", c.vocab_size},   {"hiddenDim", c.hidden_dim},
                      {"layers", c.layers},          {"heads", c.heads},
                      {"maxSeqLen", c.max_seq_len},  {"initSeed", c.init_seed},
                      {"tieHead", c.tie_head},       {"projectionHead", c.projection_head},
                      {"initStd", c.init_std}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    ModelConfig c;
    c.vocab_size = j.at("vocabSize").get<std::size_t>();
    c.hidden_dim = j.at("hiddenDim").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.max_seq_len = j.at("maxSeqLen").get<std::size_t>();
    c.init_seed = j.at("initSeed").get<std::uint64_t>();
    c.tie_head = j.value("tieHead", false);
    c.projection_head = j.value("projectionHead", false);
    c.init_std = j.value("initStd", 0.02);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model config: ") + e.what());
  }
}

void ForwardPass::backward(const Vector* d_logits, const Vector* d_feature, GradientSet& grads) {
  std::vector<std::pair<Var, Matrix>> seeds;
  if (d_logits) seeds.emplace_back(logits_, d_logits->transpose());
  if (d_feature) seeds.emplace_back(feature_, d_feature->transpose());
  if (seeds.empty()) return;
  tape_.backward(seeds, grads);
}

MaskedLm::MaskedLm(ModelConfig config) : config_(config) {
  config_.validate();
  Rng rng(config_.init_seed);
  const auto d = static_cast<Eigen::Index>(config_.hidden_dim);
  const auto f = static_cast<Eigen::Index>(config_.ffn_dim());
  const auto v = static_cast<Eigen::Index>(config_.vocab_size);
  const auto t = static_cast<Eigen::Index>(config_.max_seq_len);
  auto normal = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal(0.0, config_.init_std);
    }
    return m;
  };
  auto zeros = [](Eigen::Index r, Eigen::Index c) { return Matrix::Zero(r, c).eval(); };
  auto ones = [](Eigen::Index c) { return Matrix::Ones(1, c).eval(); };

  add_param("tok_emb", normal(v, d));
  add_param("pos_emb", normal(t, d));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const auto p = "layer" + std::to_string(l) + ".";
    add_param(p + "ln1.gain", ones(d));
    add_param(p + "ln1.bias", zeros(1, d));
    add_param(p + "attn.wq", normal(d, d));
    add_param(p + "attn.bq", zeros(1, d));
    add_param(p + "attn.wk", normal(d, d));
    add_param(p + "attn.bk", zeros(1, d));
    add_param(p + "attn.wv", normal(d, d));
    add_param(p + "attn.bv", zeros(1, d));
    add_param(p + "attn.wo", normal(d, d));
    add_param(p + "attn.bo", zeros(1, d));
    add_param(p + "ln2.gain", ones(d));
    add_param(p + "ln2.bias", zeros(1, d));
    add_param(p + "ffn.w1", normal(d, f));
    add_param(p + "ffn.b1", zeros(1, f));
    add_param(p + "ffn.w2", normal(f, d));
    add_param(p + "ffn.b2", zeros(1, d));
  }
  add_param("final_ln.gain", ones(d));
  add_param("final_ln.bias", zeros(1, d));
  if (!config_.tie_head) add_param("head.weight", normal(v, d));
  add_param("head.bias", zeros(1, v));
  if (config_.projection_head) {
    add_param("proj.weight", normal(d, d));
    add_param("proj.bias", zeros(1, d));
  }
}

MaskedLm::MaskedLm(const MaskedLm& other)
    : config_(other.config_), params_(other.params_), version_(other.version_),
      forward_count_(other.forward_count_.load()) {}

MaskedLm& MaskedLm::operator=(const MaskedLm& other) {
  if (this != &other) {
    config_ = other.config_;
    params_ = other.params_;
    version_ = other.version_;
    forward_count_ = other.forward_count_.load();
  }
  return *this;
}

std::size_t MaskedLm::add_param(std::string name, Matrix value) {
  params_.push_back({std::move(name), std::move(value)});
  return params_.size() - 1;
}

std::size_t MaskedLm::parameter_count() const {
  return std::accumulate(params_.begin(), params_.end(), std::size_t{0},
                         [](std::size_t n, const Parameter& p) {
                           return n + static_cast<std::size_t>(p.value.size());
                         });
}

std::optional<std::size_t> MaskedLm::find_parameter(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

GradientSet MaskedLm::make_gradients() const {
  std::vector<Matrix> shapes;
  shapes.reserve(params_.size());
  for (const auto& p : params_) shapes.push_back(p.value);
  return GradientSet(shapes);
}

ForwardPass MaskedLm::forward(const TokenizedPrompt& prompt) const {
  const auto len = prompt.attention_length;
  if (len == 0 || len > prompt.token_ids.size()) throw DataError("forward: bad attention length");
  if (len > config_.max_seq_len) throw DataError("forward: prompt longer than max_seq_len");
  if (prompt.mask_index >= len) throw DataError("forward: mask index outside the prompt");
  std::vector<int> ids(prompt.token_ids.begin(), prompt.token_ids.begin() + static_cast<std::ptrdiff_t>(len));
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw DataError("forward: token id " + std::to_string(id) + " outside the vocabulary");
    }
  }
  forward_count_.fetch_add(1);

  ForwardPass pass;
  Tape& t = pass.tape_;
  std::size_t next = 0;
  auto param = [&]() { const auto i = next++; return t.parameter(i, params_[i].value); };

  Var tok = param();
  Var pos = param();
  std::vector<int> positions(len);
  std::iota(positions.begin(), positions.end(), 0);
  Var x = add(t, gather_rows(t, tok, ids), gather_rows(t, pos, positions));

  const int heads = static_cast<int>(config_.heads);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    Var ln1_g = param(), ln1_b = param();
    Var wq = param(), bq = param(), wk = param(), bk = param();
    Var wv = param(), bv = param(), wo = param(), bo = param();
    Var ln2_g = param(), ln2_b = param();
    Var w1 = param(), b1 = param(), w2 = param(), b2 = param();

    Var h = layer_norm(t, x, ln1_g, ln1_b);
    Var q = add_row(t, matmul(t, h, wq), bq);
    Var k = add_row(t, matmul(t, h, wk), bk);
    Var v = add_row(t, matmul(t, h, wv), bv);
    Var attn = add_row(t, matmul(t, multi_head_attention(t, q, k, v, heads), wo), bo);
    x = add(t, x, attn);
    Var h2 = layer_norm(t, x, ln2_g, ln2_b);
    Var ff = add_row(t, matmul(t, gelu(t, add_row(t, matmul(t, h2, w1), b1)), w2), b2);
    x = add(t, x, ff);
    if (!t.value(x).allFinite()) {
      throw NumericError("non-finite activation after layer " + std::to_string(l));
    }
  }
  Var fg = param(), fb = param();
  Var hs = layer_norm(t, x, fg, fb);
  Var mask_hidden = select_row(t, hs, prompt.mask_index);
  Var head_w = config_.tie_head ? tok : param();
  Var head_b = param();
  pass.logits_ = add_row(t, matmul_nt(t, mask_hidden, head_w), head_b);
  if (config_.projection_head) {
    Var pw = param(), pb = param();
    pass.feature_ = add_row(t, matmul(t, mask_hidden, pw), pb);
  } else {
    pass.feature_ = mask_hidden;
  }
  if (!t.value(pass.logits_).allFinite()) throw NumericError("non-finite MLM logits");

  auto& out = pass.output_;
  out.hidden_states = t.value(hs);
  out.mask_index = prompt.mask_index;
  out.mask_hidden = t.value(mask_hidden).row(0).transpose();
  out.mlm_logits = t.value(pass.logits_).row(0).transpose();
  out.feature = t.value(pass.feature_).row(0).transpose();
  return pass;
}

std::string MaskedLm::digest() const {
  Sha256 h;
  for (const auto& p : params_) {
    h.update(p.name);
    h.update(p.value.data(), static_cast<std::size_t>(p.value.size()) * sizeof(double));
  }
  return h.hex_digest();
}

MaskedLm init_reference_model(const ModelConfig& config) { return MaskedLm(config); }

std::vector<std::string> untouched_parameters(const MaskedLm& model, const GradientSet& grads) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    if (!grads.touched(i)) out.push_back(model.parameters()[i].name);
  }
  return out;
}

void require_all_touched(const MaskedLm& model, const GradientSet& grads) {
  auto missing = untouched_parameters(model, grads);
  if (missing.empty()) return;
  std::string msg = "parameters without a gradient path:";
  for (const auto& m : missing) msg += " " + m;
  throw Error(msg);
}

}  // namespace cppf
