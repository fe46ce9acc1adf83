#pragma once

// Greedy caption generation and BLEU scoring.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "capgen/datapipe.hpp"
#include "capgen/tensor.hpp"
#include "capgen/textpipe.hpp"
#include "capgen/transformer.hpp"

namespace capgen {

using Tokens = std::vector<std::string>;

// Starts from <start> and appends the argmax (lowest id on ties) of the last
// position's logits until <end> or until the sequence holds max_len ids.
// Returns the generated ids without <start>/<end>; at most max_len - 1 of them.
// features is one image's [feat_len, feat_dim] grid.
std::vector<std::int32_t> greedy_decode(const Model& model, const nd::Tensor<float>& features, std::size_t max_len);

enum class Smoothing { kNone, kAddEpsilon };

struct BleuConfig {
  std::size_t max_order = 4;
  Smoothing smoothing = Smoothing::kNone;
  double epsilon = 1e-9;
};

struct NgramCount {
  std::size_t clipped = 0;
  std::size_t total = 0;
  bool operator==(const NgramCount&) const = default;
};

// Hypothesis n-grams clipped by their max count in any single reference.
NgramCount modified_ngram_precision(const Tokens& hypothesis, const std::vector<Tokens>& references, std::size_t n);

struct Segment {
  Tokens hypothesis;
  std::vector<Tokens> references;
};

// Pooled precisions over orders 1..n, uniform weights, closest-reference
// brevity penalty (ties to the shorter reference). Zero when every hypothesis
// is empty or any pooled precision is zero (unless smoothing is enabled).
double corpus_bleu(const std::vector<Segment>& segments, const BleuConfig& config, std::size_t n);

// Single-segment BLEU; zero precisions become epsilon / max(total, 1) when
// config.smoothing is kAddEpsilon.
double sentence_bleu(const Tokens& hypothesis, const std::vector<Tokens>& references, const BleuConfig& config,
                     std::size_t n);

// Sentence-level config used for per-image scores.
inline BleuConfig sentence_config() { return BleuConfig{4, Smoothing::kAddEpsilon, 1e-9}; }

struct CaptionResult {
  std::string image_id;
  Tokens hypothesis;
  std::vector<Tokens> references;
  std::array<double, 4> bleu{};  // BLEU-1..4
};

struct EvaluationResult {
  std::array<double, 4> corpus{};  // corpus BLEU-1..4, no smoothing
  std::vector<CaptionResult> results;  // ordered by image_id
};

// Greedy-decodes each image once and scores it against all of its references.
EvaluationResult evaluate_captions(const Model& model, const Vocab& vocab, const Dataset& data);

// evaluate_captions plus the CSV report
// (image_id,hypothesis,bleu1..bleu4 rows then "#CORPUS,,b1,b2,b3,b4").
EvaluationResult evaluate_test_set(const Model& model, const Vocab& vocab, const Dataset& data,
                                   const std::filesystem::path& report_path);

void write_report(const EvaluationResult& eval, const std::filesystem::path& path);

}  // namespace capgen
