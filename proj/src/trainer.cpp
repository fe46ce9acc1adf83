#include "capgen/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "capgen/binio.hpp"
#include "capgen/captioner.hpp"
#include "capgen/errors.hpp"

namespace capgen {

using NamedTensors = std::vector<std::pair<std::string, nd::Tensor<float>>>;

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (patience == 0) throw ConfigError("patience must be >= 1");
}

AdamState AdamState::zeros_like(const NamedTensors& params) {
  AdamState s;
  for (const auto& [name, t] : params) {
    s.m.emplace_back(t.shape());
    s.v.emplace_back(t.shape());
  }
  return s;
}

void adam_step(NamedTensors& params, AdamState& state, const TrainConfig& config) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ContractError("Adam state does not match the parameter list");
  for (const auto& [name, t] : params)
    if (!t.has_grad()) throw ContractError("parameter '" + name + "' has no gradient");

  state.t += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& param = params[p].second;
    auto w = param.data();
    auto g = std::as_const(param).grad();
    auto m = state.m[p].data();
    auto v = state.v[p].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double m_hat = mi / c1;
      const double v_hat = vi / c2;
      w[i] = static_cast<float>(w[i] - config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps));
    }
  }
}

template <class R>
nd::Tensor<R> batch_loss(nd::Graph<R>& g, const ModelParams<R>& params, const ModelConfig& config, const Batch& batch) {
  nd::Tensor<R> feats;
  if constexpr (std::is_same_v<R, float>) {
    feats = batch.features;
  } else {
    feats = batch.features.template cast<R>();
  }
  auto memory = encoder_forward(g, feats, params, config);
  auto logits = decoder_forward(g, batch.input_ids, memory, params, config);
  return nd::cross_entropy(g, logits, batch.target_ids, batch.pad_mask);
}

template nd::Tensor<float> batch_loss(nd::Graph<float>&, const ModelParams<float>&, const ModelConfig&, const Batch&);
template nd::Tensor<double> batch_loss(nd::Graph<double>&, const ModelParams<double>&, const ModelConfig&,
                                       const Batch&);

double train_step(Model& model, AdamState& state, const Batch& batch, const TrainConfig& config,
                  std::size_t batch_index) {
  model.params.set_requires_grad(true);
  model.params.zero_grads();
  nd::Graph<float> g;
  auto loss = batch_loss(g, model.params, model.config, batch);
  const double value = loss.item();
  if (!std::isfinite(value))
    throw NumericError(fmt::format("non-finite loss {} at batch {} (step {})", value, batch_index, state.t + 1));
  g.backward(loss);
  adam_step(model.params.entries(), state, config);
  model.params.zero_grads();
  return value;
}

namespace {

std::size_t count_tokens(const Batch& b) {
  std::size_t n = 0;
  for (auto m : b.pad_mask.data) n += m ? 1 : 0;
  return n;
}

}  // namespace

EpochLoss run_epoch(Model& model, AdamState& state, const Dataset& train, const TrainConfig& config,
                    std::uint64_t epoch) {
  EpochLoss out;
  double weighted = 0.0;
  BatchStream stream(train, config.batch_size, config.seed, epoch);
  std::size_t index = 0;
  while (auto batch = stream.next()) {
    const double loss = train_step(model, state, *batch, config, index++);
    const std::size_t n = count_tokens(*batch);
    weighted += loss * static_cast<double>(n);
    out.tokens += n;
  }
  out.mean_loss = out.tokens ? weighted / static_cast<double>(out.tokens) : 0.0;
  return out;
}

ValidationResult validate(const Model& model, const Vocab& vocab, const Dataset& val, std::size_t batch_size) {
  ValidationResult out;
  if (val.records.empty()) return out;
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  double weighted = 0.0;
  std::size_t tokens = 0;
  std::vector<std::size_t> idx;
  auto flush = [&] {
    const Batch b = assemble_batch(val, idx);
    nd::Graph<float> g(false);
    const double loss = batch_loss(g, model.params, model.config, b).item();
    const std::size_t n = count_tokens(b);
    weighted += loss * static_cast<double>(n);
    tokens += n;
    idx.clear();
  };
  for (std::size_t i = 0; i < val.records.size(); ++i) {
    idx.push_back(i);
    if (idx.size() == batch_size) flush();
  }
  if (!idx.empty()) flush();
  out.loss = tokens ? weighted / static_cast<double>(tokens) : 0.0;
  out.bleu4 = evaluate_captions(model, vocab, val).corpus[3];
  return out;
}

bool early_stop_check(const std::vector<double>& bleu_history, std::size_t patience) {
  if (bleu_history.empty()) throw ContractError("early stopping needs a non-empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < bleu_history.size(); ++i)
    if (bleu_history[i] > bleu_history[best]) best = i;
  return bleu_history.size() - 1 - best >= patience;
}

const char* stop_reason_name(StopReason reason) {
  return reason == StopReason::kEarlyStop ? "early_stop" : "max_epochs";
}

std::string metrics_row(const EpochRow& row) {
  return fmt::format("{},{:.9g},{:.9g},{:.9g},{:.3f}", row.epoch, row.train_loss, row.val_loss, row.val_bleu4,
                     row.wall_seconds);
}

TrainReport fit(Model& model, AdamState& state, const Vocab& vocab, const Dataset& train, const Dataset& val,
                const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train.records.empty()) throw ConfigError("training split is empty");
  if (val.records.empty()) throw ConfigError("validation split is empty");

  std::ofstream metrics;
  if (!config.metrics_path.empty()) {
    metrics.open(config.metrics_path, std::ios::binary | std::ios::trunc);
    if (!metrics) throw Error("cannot write metrics file " + config.metrics_path.string());
    metrics << kMetricsHeader << '\n' << std::flush;
  }
  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

  TrainReport report;
  std::vector<double> history;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto train_loss = run_epoch(model, state, train, config, epoch);
    const auto v = validate(model, vocab, val, config.batch_size);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    EpochRow row{epoch, train_loss.mean_loss, v.loss, v.bleu4, config.record_wall_time ? secs : 0.0};
    report.rows.push_back(row);
    const bool improved = history.empty() || v.bleu4 > history[report.best_epoch - 1];
    history.push_back(v.bleu4);
    if (improved) report.best_epoch = epoch;

    if (!config.checkpoint_dir.empty()) {
      if (improved) save_checkpoint(model.params, state, model.config, config.checkpoint_dir / "best.ckpt");
      save_checkpoint(model.params, state, model.config, config.checkpoint_dir / "last.ckpt");
    }
    if (metrics.is_open()) metrics << metrics_row(row) << '\n' << std::flush;
    if (on_epoch) on_epoch(row);

    if (early_stop_check(history, config.patience)) {
      report.stop_reason = StopReason::kEarlyStop;
      return report;
    }
  }
  report.stop_reason = StopReason::kMaxEpochs;
  return report;
}

namespace {

constexpr char kCkptMagic[6] = {'C', 'K', 'P', 'T', '1', '\0'};
constexpr std::uint64_t kMaxExactStep = 1ull << 24;

struct ConfigField {
  const char* name;
  std::size_t ModelConfig::*field;
};

constexpr ConfigField kConfigFields[] = {
    {"config.d_model", &ModelConfig::d_model},   {"config.n_heads", &ModelConfig::n_heads},
    {"config.seq_len", &ModelConfig::seq_len},   {"config.vocab_size", &ModelConfig::vocab_size},
    {"config.feat_dim", &ModelConfig::feat_dim}, {"config.feat_len", &ModelConfig::feat_len},
    {"config.ffn_dim", &ModelConfig::ffn_dim},
};

void write_tensor(binio::Writer& w, const std::string& name, const nd::Tensor<float>& t) {
  if (name.size() > 0xffff) throw CheckpointError("tensor name too long: " + name);
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
  w.f32s(t.data());
}

}  // namespace

void save_checkpoint(const ModelParams<float>& params, const AdamState& state, const ModelConfig& config,
                     const std::filesystem::path& path) {
  config.validate();
  const auto& entries = params.entries();
  if (state.m.size() != entries.size() || state.v.size() != entries.size())
    throw CheckpointError("Adam state does not match the parameter list");
  if (state.t > kMaxExactStep) throw CheckpointError("step counter too large to store exactly");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  binio::Writer w(out);
  w.bytes(kCkptMagic, sizeof(kCkptMagic));
  w.u32(kCheckpointVersion);
  w.u64(config.arch_hash());
  const std::size_t count = std::size(kConfigFields) + 3 * entries.size() + 1;
  w.u32(static_cast<std::uint32_t>(count));
  for (const auto& f : kConfigFields) write_tensor(w, f.name, nd::Tensor<float>::scalar(static_cast<float>(config.*f.field)));
  for (const auto& [name, t] : entries) write_tensor(w, name, t);
  for (std::size_t i = 0; i < entries.size(); ++i) write_tensor(w, entries[i].first + ".m", state.m[i]);
  for (std::size_t i = 0; i < entries.size(); ++i) write_tensor(w, entries[i].first + ".v", state.v[i]);
  write_tensor(w, "adam.t", nd::Tensor<float>::scalar(static_cast<float>(state.t)));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string src = path.string();
  try {
    binio::Reader r(buf, src);
    char magic[6];
    r.bytes(magic, sizeof(magic));
    if (!std::equal(magic, magic + 6, kCkptMagic)) throw CheckpointError(src + ": bad magic, not a CKPT1 file");
    const auto version = r.u32();
    if (version != kCheckpointVersion)
      throw CheckpointError(src + ": unsupported checkpoint version " + std::to_string(version));
    const auto hash = r.u64();
    const auto count = r.u32();

    std::vector<std::pair<std::string, nd::Tensor<float>>> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string name(r.u16(), '\0');
      r.bytes(name.data(), name.size());
      const auto rank = r.u32();
      if (rank > 8) throw CheckpointError(src + ": implausible rank for " + name);
      nd::Shape shape;
      for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.u32());
      std::vector<float> data(nd::numel(shape));
      if (data.size() * 4 > r.remaining()) throw CheckpointError(src + ": truncated payload for " + name);
      r.f32s(data);
      tensors.emplace_back(std::move(name), nd::Tensor<float>(std::move(shape), std::move(data)));
    }
    if (r.remaining() != 0) throw CheckpointError(src + ": trailing bytes after last tensor");

    auto find = [&](const std::string& name) -> const nd::Tensor<float>& {
      for (const auto& [n, t] : tensors)
        if (n == name) return t;
      throw CheckpointError(src + ": missing tensor '" + name + "'");
    };

    Checkpoint ck;
    for (const auto& f : kConfigFields) ck.config.*f.field = static_cast<std::size_t>(find(f.name).item());
    ck.config.validate();
    if (ck.config.arch_hash() != hash) throw CheckpointError(src + ": architecture hash does not match stored config");

    // Names and shapes come from the config; values from the file.
    ck.params = ModelParams<float>::zeros(ck.config);
    for (auto& [name, t] : ck.params.entries()) {
      const auto& stored = find(name);
      if (stored.shape() != t.shape())
        throw CheckpointError(src + ": tensor '" + name + "' has shape " + nd::shape_str(stored.shape()) +
                              ", expected " + nd::shape_str(t.shape()));
      t = stored;
      const auto& m = find(name + ".m");
      const auto& v = find(name + ".v");
      if (m.shape() != t.shape() || v.shape() != t.shape())
        throw CheckpointError(src + ": Adam moments for '" + name + "' have the wrong shape");
      ck.adam.m.push_back(m);
      ck.adam.v.push_back(v);
    }
    const float step = find("adam.t").item();
    if (!(step >= 0.0f) || step != std::floor(step)) throw CheckpointError(src + ": invalid step counter");
    ck.adam.t = static_cast<std::uint64_t>(step);
    if (count != std::size(kConfigFields) + 3 * ck.params.entries().size() + 1)
      throw CheckpointError(src + ": unexpected tensor count " + std::to_string(count));
    return ck;
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointError(e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  auto ck = load_checkpoint(path);
  if (ck.config.arch_hash() != expected.arch_hash())
    throw CheckpointError(path.string() + ": architecture hash mismatch (checkpoint " +
                          fmt::format("{:016x}", ck.config.arch_hash()) + ", expected " +
                          fmt::format("{:016x}", expected.arch_hash()) + ")");
  return ck;
}

}  // namespace capgen
