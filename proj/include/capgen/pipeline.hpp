#pragma once

// End-to-end operations behind the C API and the command-line tool.

#include <filesystem>
#include <string>
#include <vector>

#include "capgen/captioner.hpp"
#include "capgen/run_config.hpp"
#include "capgen/trainer.hpp"

namespace capgen {

struct VocabBuildSummary {
  std::size_t token_count = 0;  // vocab entries including specials
  double coverage = 0.0;        // fraction of corpus tokens that are in-vocab
  std::size_t caption_count = 0;
  std::vector<std::string> warnings;
};

CaptionFormat resolve_caption_format(const RunConfig& config, const std::filesystem::path& captions);

VocabBuildSummary build_vocab_file(const std::filesystem::path& captions, const std::filesystem::path& out,
                                   std::size_t max_size, const RunConfig& config = {});

struct TrainSummary {
  TrainReport report;
  ModelConfig model;
  std::size_t train_images = 0, val_images = 0, test_images = 0;
  std::vector<std::string> warnings;
};

// Needs captions, features, vocab, out. Writes out/best.ckpt, out/last.ckpt,
// out/metrics.csv and out/split_{train,val,test}.tsv.
TrainSummary train_from_config(const RunConfig& config, const EpochCallback& on_epoch = {});

// Throws CheckpointError when the data implies a different architecture hash.
void check_compatible(const ModelConfig& model, std::size_t vocab_size, std::size_t feat_len, std::size_t feat_dim);

Model load_model(const std::filesystem::path& checkpoint);

EvaluationResult evaluate_files(const Model& model, const Vocab& vocab, const std::filesystem::path& captions,
                                const std::filesystem::path& features_dir, const std::filesystem::path& report,
                                const RunConfig& config = {}, std::vector<std::string>* warnings = nullptr);

std::string caption_file(const Model& model, const Vocab& vocab, const std::filesystem::path& feature_file);

}  // namespace capgen
