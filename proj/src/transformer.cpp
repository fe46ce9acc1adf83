#include "capgen/transformer.hpp"

#include <cmath>

#include "capgen/errors.hpp"
#include "capgen/rng.hpp"
#include "capgen/specials.hpp"

namespace capgen {

using nd::BoolTensor;
using nd::Graph;
using nd::IndexTensor;
using nd::Shape;
using nd::Tensor;

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (d_model == 0 || n_heads == 0 || seq_len == 0 || feat_dim == 0 || feat_len == 0 || ffn_dim == 0)
    fail("all dimensions must be positive");
  if (d_model % n_heads != 0)
    fail("d_model " + std::to_string(d_model) + " is not divisible by n_heads " + std::to_string(n_heads));
  if (d_model % 2 != 0) fail("d_model must be even for positional encoding, got " + std::to_string(d_model));
  if (vocab_size < static_cast<std::size_t>(kNumSpecials) || vocab_size > kMaxVocabSize)
    fail("vocab_size " + std::to_string(vocab_size) + " outside [4, 13000]");
  if (seq_len < 2) fail("seq_len must be at least 2");
}

std::uint64_t ModelConfig::arch_hash() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (std::size_t v : {d_model, n_heads, seq_len, vocab_size, feat_dim, feat_len, ffn_dim}) mix(v);
  return h;
}

std::size_t ModelConfig::parameter_count() const {
  const std::size_t d = d_model;
  return vocab_size * d                      // token embedding
         + feat_dim * d + d                  // feature projection
         + 3 * 4 * d * d                     // encoder self, decoder self, decoder cross
         + 4 * 2 * d                         // four norms
         + d * ffn_dim + ffn_dim + ffn_dim * d + d  // feed-forward
         + d * vocab_size + vocab_size;      // output head
}

namespace {

struct ParamSpec {
  std::string name;
  Shape shape;
  enum Init { kGlorot, kEmbedding, kZero, kOne } init;
};

std::vector<ParamSpec> param_specs(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  std::vector<ParamSpec> specs;
  specs.push_back({"token_embedding", {c.vocab_size, d}, ParamSpec::kEmbedding});
  specs.push_back({"feature_projection.weight", {c.feat_dim, d}, ParamSpec::kGlorot});
  specs.push_back({"feature_projection.bias", {d}, ParamSpec::kZero});
  auto attention = [&](const std::string& prefix) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) specs.push_back({prefix + "." + w, {d, d}, ParamSpec::kGlorot});
  };
  auto norm = [&](const std::string& prefix) {
    specs.push_back({prefix + ".gain", {d}, ParamSpec::kOne});
    specs.push_back({prefix + ".bias", {d}, ParamSpec::kZero});
  };
  attention("encoder.self_attention");
  norm("encoder.norm");
  attention("decoder.self_attention");
  norm("decoder.norm1");
  attention("decoder.cross_attention");
  norm("decoder.norm2");
  specs.push_back({"decoder.ffn.w1", {d, c.ffn_dim}, ParamSpec::kGlorot});
  specs.push_back({"decoder.ffn.b1", {c.ffn_dim}, ParamSpec::kZero});
  specs.push_back({"decoder.ffn.w2", {c.ffn_dim, d}, ParamSpec::kGlorot});
  specs.push_back({"decoder.ffn.b2", {d}, ParamSpec::kZero});
  norm("decoder.norm3");
  specs.push_back({"output.weight", {d, c.vocab_size}, ParamSpec::kGlorot});
  specs.push_back({"output.bias", {c.vocab_size}, ParamSpec::kZero});
  return specs;
}

}  // namespace

template <class R>
ModelParams<R> ModelParams<R>::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams out;
  for (const auto& spec : param_specs(config)) {
    Tensor<R> t(spec.shape);
    auto data = t.data();
    switch (spec.init) {
      case ParamSpec::kGlorot: {
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.shape[0] + spec.shape[1]));
        for (auto& v : data) v = static_cast<R>(rng.uniform(-limit, limit));
        break;
      }
      case ParamSpec::kEmbedding: {
        const double stddev = 1.0 / std::sqrt(static_cast<double>(config.d_model));
        for (auto& v : data) v = static_cast<R>(stddev * rng.normal());
        break;
      }
      case ParamSpec::kZero:
        break;
      case ParamSpec::kOne:
        for (auto& v : data) v = R(1);
        break;
    }
    out.entries_.emplace_back(spec.name, std::move(t));
  }
  return out;
}

template <class R>
ModelParams<R> ModelParams<R>::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams out;
  for (const auto& spec : param_specs(config)) out.entries_.emplace_back(spec.name, Tensor<R>(spec.shape));
  return out;
}

template <class R>
const Tensor<R>& ModelParams<R>::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return e.second;
  throw ContractError("no parameter named '" + name + "'");
}

template <class R>
Tensor<R>& ModelParams<R>::get(const std::string& name) {
  return const_cast<Tensor<R>&>(std::as_const(*this).get(name));
}

template <class R>
bool ModelParams<R>::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return true;
  return false;
}

template <class R>
std::size_t ModelParams<R>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

template <class R>
void ModelParams<R>::set_requires_grad(bool on) {
  for (auto& e : entries_) e.second.set_requires_grad(on);
}

template <class R>
void ModelParams<R>::zero_grads() {
  for (auto& e : entries_) {
    e.second.grad();
    e.second.zero_grad();
  }
}

template <class R>
ModelParams<R> ModelParams<R>::deep_copy() const {
  ModelParams out;
  for (const auto& [name, t] : entries_) {
    auto copy = t.detached_copy();
    copy.set_requires_grad(t.requires_grad());
    out.entries_.emplace_back(name, std::move(copy));
  }
  return out;
}

AttentionMask::AttentionMask(BoolTensor mask) : mask_(std::move(mask)) {
  const auto& s = mask_.shape;
  if (s.size() != 2 && s.size() != 3) throw DimensionError("attention mask must be rank 2 or 3, got " + nd::shape_str(s));
  const std::size_t tk = s.back();
  for (std::size_t r = 0; r < mask_.data.size() / tk; ++r) {
    bool any = false;
    for (std::size_t j = 0; j < tk; ++j) any = any || mask_.data[r * tk + j];
    if (!any) throw ContractError("attention mask row " + std::to_string(r) + " forbids every key");
  }
}

AttentionMask causal_mask(std::size_t t) {
  if (t == 0) throw ContractError("causal mask needs t >= 1");
  std::vector<std::uint8_t> m(t * t, 0);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j <= i; ++j) m[i * t + j] = 1;
  return AttentionMask(BoolTensor({t, t}, std::move(m)));
}

AttentionMask causal_padding_mask(const IndexTensor& tokens) {
  if (tokens.shape.size() != 2) throw DimensionError("tokens must be [B, T], got " + nd::shape_str(tokens.shape));
  const std::size_t b = tokens.shape[0], t = tokens.shape[1];
  std::vector<std::uint8_t> m(b * t * t, 0);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j <= i; ++j) m[(n * t + i) * t + j] = tokens.at(n, j) != kPadId ? 1 : 0;
  return AttentionMask(BoolTensor({b, t, t}, std::move(m)));
}

template <class R>
Tensor<R> positional_encoding(std::size_t seq_len, std::size_t d_model) {
  if (d_model == 0 || d_model % 2 != 0)
    throw ConfigError("positional encoding needs an even d_model, got " + std::to_string(d_model));
  if (seq_len == 0) throw ConfigError("positional encoding needs seq_len >= 1");
  Tensor<R> pe({seq_len, d_model});
  auto d = pe.data();
  for (std::size_t pos = 0; pos < seq_len; ++pos)
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d_model));
      d[pos * d_model + i] = static_cast<R>(std::sin(angle));
      d[pos * d_model + i + 1] = static_cast<R>(std::cos(angle));
    }
  return pe;
}

template <class R>
Tensor<R> scaled_dot_product_attention(Graph<R>& g, const Tensor<R>& q, const Tensor<R>& k, const Tensor<R>& v,
                                       const AttentionMask* mask) {
  const std::size_t dk = q.dim(q.rank() - 1);
  if (k.dim(k.rank() - 1) != dk)
    throw DimensionError("attention: query/key widths differ, " + nd::shape_str(q.shape()) + " vs " +
                         nd::shape_str(k.shape()));
  auto scores = nd::scale(g, nd::matmul(g, q, nd::transpose_last2(g, k)), R(1) / std::sqrt(static_cast<R>(dk)));
  auto weights = mask ? nd::masked_softmax(g, scores, mask->tensor()) : nd::softmax(g, scores, scores.rank() - 1);
  return nd::matmul(g, weights, v);
}

template <class R>
AttentionWeights<R> attention_weights(const ModelParams<R>& params, const std::string& prefix) {
  return {params.get(prefix + ".wq"), params.get(prefix + ".wk"), params.get(prefix + ".wv"),
          params.get(prefix + ".wo")};
}

template <class R>
Tensor<R> multi_head_attention(Graph<R>& g, const Tensor<R>& x_q, const Tensor<R>& x_kv, const AttentionWeights<R>& w,
                               std::size_t n_heads, const AttentionMask* mask) {
  if (x_q.rank() != 3 || x_kv.rank() != 3 || x_q.dim(0) != x_kv.dim(0) || x_q.dim(2) != x_kv.dim(2))
    throw DimensionError("multi-head attention: incompatible inputs " + nd::shape_str(x_q.shape()) + " and " +
                         nd::shape_str(x_kv.shape()));
  const std::size_t b = x_q.dim(0), tq = x_q.dim(1), tk = x_kv.dim(1), d = x_q.dim(2);
  if (n_heads == 0 || d % n_heads != 0)
    throw ConfigError("n_heads " + std::to_string(n_heads) + " does not divide width " + std::to_string(d));
  const std::size_t dh = d / n_heads;

  auto split = [&](const Tensor<R>& x, std::size_t t) {
    return nd::permute(g, nd::reshape(g, x, {b, t, n_heads, dh}), {0, 2, 1, 3});
  };
  auto q = split(nd::matmul(g, x_q, w.wq), tq);
  auto k = split(nd::matmul(g, x_kv, w.wk), tk);
  auto v = split(nd::matmul(g, x_kv, w.wv), tk);
  auto heads = scaled_dot_product_attention(g, q, k, v, mask);
  auto merged = nd::reshape(g, nd::permute(g, heads, {0, 2, 1, 3}), {b, tq, d});
  return nd::matmul(g, merged, w.wo);
}

namespace {

template <class R>
Tensor<R> norm(Graph<R>& g, const Tensor<R>& x, const ModelParams<R>& p, const std::string& prefix) {
  return nd::layer_norm(g, x, p.get(prefix + ".gain"), p.get(prefix + ".bias"), static_cast<R>(kLayerNormEps));
}

}  // namespace

template <class R>
Tensor<R> encoder_forward(Graph<R>& g, const Tensor<R>& features, const ModelParams<R>& params,
                          const ModelConfig& config) {
  if (features.rank() != 3) throw DimensionError("features must be [B, L, F], got " + nd::shape_str(features.shape()));
  if (features.dim(2) != config.feat_dim)
    throw ConfigError("feature width " + std::to_string(features.dim(2)) + " does not match config feat_dim " +
                      std::to_string(config.feat_dim));
  if (features.dim(1) != config.feat_len)
    throw ConfigError("feature length " + std::to_string(features.dim(1)) + " does not match config feat_len " +
                      std::to_string(config.feat_len));
  auto x = nd::matmul(g, features, params.get("feature_projection.weight"));
  x = nd::add_broadcast(g, x, params.get("feature_projection.bias"));
  x = nd::add_broadcast(g, x, positional_encoding<R>(config.feat_len, config.d_model));
  auto attn = multi_head_attention(g, x, x, attention_weights(params, "encoder.self_attention"), config.n_heads,
                                   static_cast<const AttentionMask*>(nullptr));
  return norm(g, nd::add(g, x, attn), params, "encoder.norm");
}

template <class R>
Tensor<R> decoder_forward(Graph<R>& g, const IndexTensor& tokens, const Tensor<R>& memory,
                          const ModelParams<R>& params, const ModelConfig& config) {
  if (tokens.shape.size() != 2) throw DimensionError("tokens must be [B, T], got " + nd::shape_str(tokens.shape));
  const std::size_t t = tokens.shape[1];
  if (t > config.seq_len)
    throw ContractError("decoder input length " + std::to_string(t) + " exceeds seq_len " +
                        std::to_string(config.seq_len));
  if (memory.rank() != 3 || memory.dim(0) != tokens.shape[0] || memory.dim(2) != config.d_model)
    throw DimensionError("memory " + nd::shape_str(memory.shape()) + " does not fit tokens " +
                         nd::shape_str(tokens.shape));

  auto x = nd::embedding(g, params.get("token_embedding"), tokens);
  x = nd::scale(g, x, std::sqrt(static_cast<R>(config.d_model)));
  x = nd::add_broadcast(g, x, positional_encoding<R>(t, config.d_model));

  const auto self_mask = causal_padding_mask(tokens);
  auto a = multi_head_attention(g, x, x, attention_weights(params, "decoder.self_attention"), config.n_heads,
                                &self_mask);
  x = norm(g, nd::add(g, x, a), params, "decoder.norm1");

  auto c = multi_head_attention(g, x, memory, attention_weights(params, "decoder.cross_attention"), config.n_heads,
                                static_cast<const AttentionMask*>(nullptr));
  x = norm(g, nd::add(g, x, c), params, "decoder.norm2");

  auto h = nd::relu(g, nd::add_broadcast(g, nd::matmul(g, x, params.get("decoder.ffn.w1")),
                                         params.get("decoder.ffn.b1")));
  auto f = nd::add_broadcast(g, nd::matmul(g, h, params.get("decoder.ffn.w2")), params.get("decoder.ffn.b2"));
  x = norm(g, nd::add(g, x, f), params, "decoder.norm3");

  return nd::add_broadcast(g, nd::matmul(g, x, params.get("output.weight")), params.get("output.bias"));
}

#define CAPGEN_INSTANTIATE_MODEL(R)                                                                            \
  template class ModelParams<R>;                                                                               \
  template Tensor<R> positional_encoding<R>(std::size_t, std::size_t);                                         \
  template Tensor<R> scaled_dot_product_attention(Graph<R>&, const Tensor<R>&, const Tensor<R>&,               \
                                                  const Tensor<R>&, const AttentionMask*);                     \
  template AttentionWeights<R> attention_weights(const ModelParams<R>&, const std::string&);                   \
  template Tensor<R> multi_head_attention(Graph<R>&, const Tensor<R>&, const Tensor<R>&,                       \
                                          const AttentionWeights<R>&, std::size_t, const AttentionMask*);      \
  template Tensor<R> encoder_forward(Graph<R>&, const Tensor<R>&, const ModelParams<R>&, const ModelConfig&);   \
  template Tensor<R> decoder_forward(Graph<R>&, const IndexTensor&, const Tensor<R>&, const ModelParams<R>&,   \
                                     const ModelConfig&);

CAPGEN_INSTANTIATE_MODEL(float)
CAPGEN_INSTANTIATE_MODEL(double)

}  // namespace capgen
