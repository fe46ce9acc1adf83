#pragma once

// Adam training with masked cross-entropy, per-epoch validation, BLEU-4 early
// stopping, checkpoints, and the metrics CSV.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "capgen/datapipe.hpp"
#include "capgen/textpipe.hpp"
#include "capgen/transformer.hpp"

namespace capgen {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_dir;  // best.ckpt / last.ckpt; empty = none
  std::filesystem::path metrics_path;    // empty = none
  // When false the wall_seconds column is written as 0 so that metrics files
  // from identical seeded runs compare byte-for-byte.
  bool record_wall_time = false;

  void validate() const;
};

// First/second moments aligned with ModelParams::entries().
struct AdamState {
  std::vector<nd::Tensor<float>> m, v;
  std::uint64_t t = 0;

  static AdamState zeros_like(const std::vector<std::pair<std::string, nd::Tensor<float>>>& params);
};

// One bias-corrected Adam update from each parameter's gradient buffer.
// Throws ContractError naming a parameter without a gradient.
void adam_step(std::vector<std::pair<std::string, nd::Tensor<float>>>& params, AdamState& state,
               const TrainConfig& config);

// Masked cross-entropy of one batch under teacher forcing.
template <class R>
nd::Tensor<R> batch_loss(nd::Graph<R>& g, const ModelParams<R>& params, const ModelConfig& config, const Batch& batch);

// Forward, backward, Adam step, zeroed grads. Returns the pre-update loss.
// Throws NumericError on a non-finite loss.
double train_step(Model& model, AdamState& state, const Batch& batch, const TrainConfig& config,
                  std::size_t batch_index = 0);

struct EpochLoss {
  double mean_loss = 0.0;  // token-weighted
  std::size_t tokens = 0;
};

// One pass over prefetched batches shuffled by (config.seed, epoch).
EpochLoss run_epoch(Model& model, AdamState& state, const Dataset& train, const TrainConfig& config,
                    std::uint64_t epoch);

struct ValidationResult {
  double loss = 0.0;
  double bleu4 = 0.0;
};

ValidationResult validate(const Model& model, const Vocab& vocab, const Dataset& val, std::size_t batch_size);

// True when the earliest maximum of history sits at least `patience` entries
// before the last one.
bool early_stop_check(const std::vector<double>& bleu_history, std::size_t patience);

struct EpochRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_bleu4 = 0.0;
  double wall_seconds = 0.0;
};

enum class StopReason { kMaxEpochs, kEarlyStop };
const char* stop_reason_name(StopReason reason);

struct TrainReport {
  std::vector<EpochRow> rows;
  StopReason stop_reason = StopReason::kMaxEpochs;
  std::size_t best_epoch = 0;
};

inline constexpr const char* kMetricsHeader = "epoch,train_loss,val_loss,val_bleu4,wall_seconds";
std::string metrics_row(const EpochRow& row);

using EpochCallback = std::function<void(const EpochRow&)>;

// Trains until max_epochs or early stop. Writes best.ckpt (strictly improved
// BLEU-4), last.ckpt, and the metrics CSV as configured.
TrainReport fit(Model& model, AdamState& state, const Vocab& vocab, const Dataset& train, const Dataset& val,
                const TrainConfig& config, const EpochCallback& on_epoch = {});

// CKPT1: magic, u32 version, u64 arch hash, u32 tensor count, then named
// tensors. Architecture fields are stored as rank-0 "config.*" tensors.
struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
  AdamState adam;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelParams<float>& params, const AdamState& state, const ModelConfig& config,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also throws CheckpointError when the stored architecture differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace capgen
