#pragma once

// Caption model: projected CNN feature grid -> one encoder block (multi-head
// self-attention, residual, layer norm) -> decoder block (causal self-attention,
// cross-attention over the encoder memory, position-wise feed-forward; each
// followed by residual + layer norm) -> vocabulary logits.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "capgen/ops.hpp"
#include "capgen/tensor.hpp"

namespace capgen {

inline constexpr std::size_t kMaxVocabSize = 13000;

struct ModelConfig {
  std::size_t d_model = 512;
  std::size_t n_heads = 8;
  std::size_t seq_len = 24;
  std::size_t vocab_size = kMaxVocabSize;
  std::size_t feat_dim = 1280;
  std::size_t feat_len = 100;
  std::size_t ffn_dim = 2048;

  // Throws ConfigError on the first violated invariant.
  void validate() const;
  // FNV-1a over the architecture fields; identifies checkpoint compatibility.
  std::uint64_t arch_hash() const;
  // Number of learnable scalars implied by this config.
  std::size_t parameter_count() const;

  bool operator==(const ModelConfig&) const = default;
};

inline constexpr float kLayerNormEps = 1e-5f;

// Named learnable tensors in a fixed order (the checkpoint order).
template <class R>
class ModelParams {
 public:
  using Entry = std::pair<std::string, nd::Tensor<R>>;

  ModelParams() = default;

  // Glorot-uniform projections, N(0, d_model^-1/2) embeddings, unit-gain norms.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);
  // All-zero tensors with the right names and shapes.
  static ModelParams zeros(const ModelConfig& config);

  const nd::Tensor<R>& get(const std::string& name) const;
  nd::Tensor<R>& get(const std::string& name);
  bool contains(const std::string& name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t scalar_count() const;

  void set_requires_grad(bool on);
  // Allocates (if needed) and zeroes every gradient buffer.
  void zero_grads();

  template <class S>
  ModelParams<S> cast() const {
    ModelParams<S> out;
    for (const auto& [name, t] : entries_) out.entries().emplace_back(name, t.template cast<S>());
    return out;
  }
  ModelParams deep_copy() const;

 private:
  std::vector<Entry> entries_;
};

// Everything needed for inference.
struct Model {
  ModelConfig config;
  ModelParams<float> params;
};

// Boolean [T_q, T_k] (or per-batch [B, T_q, T_k]) mask; true = attention permitted.
class AttentionMask {
 public:
  explicit AttentionMask(nd::BoolTensor mask);
  const nd::BoolTensor& tensor() const { return mask_; }
  bool allowed(std::size_t q, std::size_t k) const { return mask_.at(q * mask_.shape.back() + k); }

 private:
  nd::BoolTensor mask_;
};

// Entry (i, j) permitted iff j <= i. t must be >= 1.
AttentionMask causal_mask(std::size_t t);

// Per-batch [B, T, T] mask: causal AND key j is not <pad>.
AttentionMask causal_padding_mask(const nd::IndexTensor& tokens);

// Interleaved sinusoids: PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(same).
template <class R>
nd::Tensor<R> positional_encoding(std::size_t seq_len, std::size_t d_model);

// softmax(q k^T / sqrt(d_k) + mask_bias) v over the last two axes.
template <class R>
nd::Tensor<R> scaled_dot_product_attention(nd::Graph<R>& g, const nd::Tensor<R>& q, const nd::Tensor<R>& k,
                                           const nd::Tensor<R>& v, const AttentionMask* mask);

template <class R>
struct AttentionWeights {
  nd::Tensor<R> wq, wk, wv, wo;
};

template <class R>
AttentionWeights<R> attention_weights(const ModelParams<R>& params, const std::string& prefix);

template <class R>
nd::Tensor<R> multi_head_attention(nd::Graph<R>& g, const nd::Tensor<R>& x_q, const nd::Tensor<R>& x_kv,
                                   const AttentionWeights<R>& w, std::size_t n_heads, const AttentionMask* mask);

// features [B, feat_len, feat_dim] -> memory [B, feat_len, d_model].
template <class R>
nd::Tensor<R> encoder_forward(nd::Graph<R>& g, const nd::Tensor<R>& features, const ModelParams<R>& params,
                              const ModelConfig& config);

// tokens [B, T] -> logits [B, T, vocab_size].
template <class R>
nd::Tensor<R> decoder_forward(nd::Graph<R>& g, const nd::IndexTensor& tokens, const nd::Tensor<R>& memory,
                              const ModelParams<R>& params, const ModelConfig& config);

}  // namespace capgen
