#include "capgen/captioner.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "capgen/errors.hpp"
#include "capgen/specials.hpp"

namespace capgen {

std::vector<std::int32_t> greedy_decode(const Model& model, const nd::Tensor<float>& features, std::size_t max_len) {
  const auto& cfg = model.config;
  if (max_len > cfg.seq_len)
    throw ContractError("max_len " + std::to_string(max_len) + " exceeds model seq_len " + std::to_string(cfg.seq_len));
  if (features.rank() != 2) throw DimensionError("expected a [feat_len, feat_dim] grid, got " + nd::shape_str(features.shape()));

  nd::Graph<float> g(false);
  const nd::Tensor<float> batch({1, features.dim(0), features.dim(1)},
                                std::vector<float>(features.data().begin(), features.data().end()));
  const auto memory = encoder_forward(g, batch, model.params, cfg);

  std::vector<std::int32_t> seq{kStartId};
  while (seq.size() < max_len) {
    const nd::IndexTensor tokens({1, seq.size()}, seq);
    const auto logits = decoder_forward(g, tokens, memory, model.params, cfg);
    const std::size_t v = cfg.vocab_size;
    const float* last = logits.data().data() + (seq.size() - 1) * v;
    std::size_t best = 0;
    for (std::size_t j = 1; j < v; ++j)
      if (last[j] > last[best]) best = j;
    if (static_cast<std::int32_t>(best) == kEndId) break;
    seq.push_back(static_cast<std::int32_t>(best));
  }
  return std::vector<std::int32_t>(seq.begin() + 1, seq.end());
}

NgramCount modified_ngram_precision(const Tokens& hypothesis, const std::vector<Tokens>& references, std::size_t n) {
  if (n == 0) throw ContractError("n-gram order must be at least 1");
  if (hypothesis.size() < n) return {};
  auto count = [n](const Tokens& toks) {
    std::map<std::vector<std::string>, std::size_t> c;
    for (std::size_t i = 0; i + n <= toks.size(); ++i)
      ++c[std::vector<std::string>(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + n))];
    return c;
  };
  const auto hyp = count(hypothesis);
  std::map<std::vector<std::string>, std::size_t> max_ref;
  for (const auto& ref : references)
    for (const auto& [gram, k] : count(ref)) {
      auto& slot = max_ref[gram];
      slot = std::max(slot, k);
    }
  NgramCount out;
  out.total = hypothesis.size() - n + 1;
  for (const auto& [gram, k] : hyp) {
    auto it = max_ref.find(gram);
    if (it != max_ref.end()) out.clipped += std::min(k, it->second);
  }
  return out;
}

double corpus_bleu(const std::vector<Segment>& segments, const BleuConfig& config, std::size_t n) {
  if (n == 0) throw ContractError("BLEU order must be at least 1");
  std::vector<std::size_t> clipped(n, 0), total(n, 0);
  std::size_t hyp_len = 0, ref_len = 0;
  for (const auto& seg : segments) {
    if (seg.references.empty()) throw ContractError("BLEU segment has no references");
    for (std::size_t k = 1; k <= n; ++k) {
      const auto c = modified_ngram_precision(seg.hypothesis, seg.references, k);
      clipped[k - 1] += c.clipped;
      total[k - 1] += c.total;
    }
    const std::size_t h = seg.hypothesis.size();
    hyp_len += h;
    std::size_t closest = seg.references.front().size();
    for (const auto& ref : seg.references) {
      const auto diff = [h](std::size_t len) { return len > h ? len - h : h - len; };
      if (diff(ref.size()) < diff(closest) || (diff(ref.size()) == diff(closest) && ref.size() < closest))
        closest = ref.size();
    }
    ref_len += closest;
  }
  if (hyp_len == 0) return 0.0;

  double log_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double p;
    if (clipped[k] == 0) {
      if (config.smoothing == Smoothing::kNone) return 0.0;
      p = config.epsilon / static_cast<double>(std::max<std::size_t>(total[k], 1));
    } else {
      p = static_cast<double>(clipped[k]) / static_cast<double>(total[k]);
    }
    log_sum += std::log(p) / static_cast<double>(n);
  }
  const double bp = hyp_len > ref_len ? 1.0
                                      : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_sum);
}

double sentence_bleu(const Tokens& hypothesis, const std::vector<Tokens>& references, const BleuConfig& config,
                     std::size_t n) {
  return corpus_bleu({Segment{hypothesis, references}}, config, n);
}

EvaluationResult evaluate_captions(const Model& model, const Vocab& vocab, const Dataset& data) {
  for (const auto& id : data.image_ids())
    if (!data.features || !data.features->count(id)) throw DatasetError("missing features for image " + id);
  if (vocab.size() != model.config.vocab_size)
    throw ConfigError("vocab has " + std::to_string(vocab.size()) + " tokens but the model expects " +
                      std::to_string(model.config.vocab_size));

  EvaluationResult eval;
  std::vector<Segment> segments;
  const auto sent_cfg = sentence_config();
  for (const auto& [image_id, refs] : data.references()) {
    const auto ids = greedy_decode(model, data.features->at(image_id).grid, model.config.seq_len);
    CaptionResult r{image_id, decode_tokens(ids, vocab), refs, {}};
    for (std::size_t n = 1; n <= 4; ++n) r.bleu[n - 1] = sentence_bleu(r.hypothesis, refs, sent_cfg, n);
    segments.push_back({r.hypothesis, refs});
    eval.results.push_back(std::move(r));
  }
  const BleuConfig corpus_cfg{4, Smoothing::kNone, 0.0};
  if (!segments.empty())
    for (std::size_t n = 1; n <= 4; ++n) eval.corpus[n - 1] = corpus_bleu(segments, corpus_cfg, n);
  return eval;
}

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join(const Tokens& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

void write_report(const EvaluationResult& eval, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write report " + path.string());
  out << "image_id,hypothesis,bleu1,bleu2,bleu3,bleu4\n";
  for (const auto& r : eval.results)
    out << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.image_id, csv_quote(join(r.hypothesis)), r.bleu[0],
                       r.bleu[1], r.bleu[2], r.bleu[3]);
  out << fmt::format("#CORPUS,,{:.6f},{:.6f},{:.6f},{:.6f}\n", eval.corpus[0], eval.corpus[1], eval.corpus[2],
                     eval.corpus[3]);
  if (!out) throw Error("failed writing report " + path.string());
}

EvaluationResult evaluate_test_set(const Model& model, const Vocab& vocab, const Dataset& data,
                                   const std::filesystem::path& report_path) {
  auto eval = evaluate_captions(model, vocab, data);
  write_report(eval, report_path);
  return eval;
}

}  // namespace capgen
