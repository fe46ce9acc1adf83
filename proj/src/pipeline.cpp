#include "capgen/pipeline.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "capgen/errors.hpp"

namespace capgen {

CaptionFormat resolve_caption_format(const RunConfig& config, const std::filesystem::path& captions) {
  const std::string f = config.get("caption_format", "auto");
  if (f == "pipe") return CaptionFormat::kFlickrPipe;
  if (f == "tsv") return CaptionFormat::kTsv;
  if (f == "auto") return detect_caption_format(captions);
  throw ConfigError("caption_format must be auto, pipe, or tsv, got '" + f + "'");
}

VocabBuildSummary build_vocab_file(const std::filesystem::path& captions, const std::filesystem::path& out,
                                   std::size_t max_size, const RunConfig& config) {
  auto loaded = load_captions(captions, resolve_caption_format(config, captions), config.length_filter());
  std::vector<std::string> texts;
  texts.reserve(loaded.records.size());
  for (const auto& r : loaded.records) texts.push_back(r.normalized);
  const Vocab vocab = build_vocab(texts, max_size);
  vocab.save(out);

  std::size_t total = 0, covered = 0;
  for (const auto& t : texts)
    for (const auto& tok : split_tokens(t)) {
      ++total;
      covered += vocab.contains(tok) ? 1 : 0;
    }
  VocabBuildSummary s;
  s.token_count = vocab.size();
  s.coverage = total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0;
  s.caption_count = texts.size();
  s.warnings = std::move(loaded.warnings);
  return s;
}

void check_compatible(const ModelConfig& model, std::size_t vocab_size, std::size_t feat_len, std::size_t feat_dim) {
  ModelConfig implied = model;
  implied.vocab_size = vocab_size;
  implied.feat_len = feat_len;
  implied.feat_dim = feat_dim;
  if (implied.arch_hash() != model.arch_hash())
    throw CheckpointError(fmt::format(
        "architecture hash mismatch: checkpoint has vocab {}, features {}x{}; inputs give vocab {}, features {}x{}",
        model.vocab_size, model.feat_len, model.feat_dim, vocab_size, feat_len, feat_dim));
}

namespace {

void write_split(const std::filesystem::path& path, const std::vector<CaptionRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) out << r.image_id << '\t' << r.normalized << '\n';
}

std::size_t distinct_images(const std::vector<CaptionRecord>& records) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.image_id);
  return ids.size();
}

}  // namespace

TrainSummary train_from_config(const RunConfig& config, const EpochCallback& on_epoch) {
  config.require({"captions", "features", "vocab", "out"});
  TrainConfig tc = config.train_config();
  const std::filesystem::path captions = config.get("captions");
  const std::filesystem::path out_dir = config.get("out");

  const Vocab vocab = Vocab::load(config.get("vocab"));
  auto loaded = load_captions(captions, resolve_caption_format(config, captions), config.length_filter());
  if (loaded.records.empty()) throw DatasetError("no usable captions in " + captions.string());
  auto features = std::make_shared<const FeatureMap>(load_features(config.get("features")));
  if (features->empty()) throw DatasetError("no .capf feature files in " + config.get("features"));
  for (const auto& r : loaded.records)
    if (!features->count(r.image_id)) throw DatasetError("missing feature file for image " + r.image_id);

  ModelConfig mc = config.model_config();
  mc.vocab_size = vocab.size();
  mc.feat_len = features->begin()->second.grid.dim(0);
  mc.feat_dim = features->begin()->second.grid.dim(1);
  mc.validate();

  encode_records(loaded.records, vocab, mc.seq_len);
  const std::string mode = config.get("split", "auto");
  Splits splits;
  if (mode == "all") {
    splits.train = loaded.records;
    splits.val = loaded.records;
  } else if (mode == "auto" || mode == "counts") {
    SplitCounts counts = default_split_counts(loaded.image_count);
    if (mode == "counts") {
      config.require({"split_train", "split_val", "split_test"});
      counts = SplitCounts{std::stoul(config.get("split_train")), std::stoul(config.get("split_val")),
                           std::stoul(config.get("split_test"))};
    }
    splits = split_dataset(loaded.records, tc.seed, counts);
  } else {
    throw ConfigError("split must be auto, all, or counts, got '" + mode + "'");
  }

  std::filesystem::create_directories(out_dir);
  write_split(out_dir / "split_train.tsv", splits.train);
  write_split(out_dir / "split_val.tsv", splits.val);
  write_split(out_dir / "split_test.tsv", splits.test);

  TrainSummary summary;
  summary.model = mc;
  summary.train_images = distinct_images(splits.train);
  summary.val_images = distinct_images(splits.val);
  summary.test_images = distinct_images(splits.test);
  summary.warnings = std::move(loaded.warnings);

  const Dataset train = make_dataset(std::move(splits.train), features, SplitTag::kTrain);
  const Dataset val = make_dataset(std::move(splits.val), features, SplitTag::kVal);

  Model model{mc, ModelParams<float>::init(mc, tc.seed)};
  AdamState adam = AdamState::zeros_like(model.params.entries());
  tc.checkpoint_dir = out_dir;
  tc.metrics_path = out_dir / "metrics.csv";
  summary.report = fit(model, adam, vocab, train, val, tc, on_epoch);
  return summary;
}

Model load_model(const std::filesystem::path& checkpoint) {
  auto ck = load_checkpoint(checkpoint);
  return Model{ck.config, std::move(ck.params)};
}

EvaluationResult evaluate_files(const Model& model, const Vocab& vocab, const std::filesystem::path& captions,
                                const std::filesystem::path& features_dir, const std::filesystem::path& report,
                                const RunConfig& config, std::vector<std::string>* warnings) {
  auto loaded = load_captions(captions, resolve_caption_format(config, captions), config.length_filter());
  if (warnings) *warnings = loaded.warnings;
  if (loaded.records.empty()) throw DatasetError("no usable captions in " + captions.string());
  auto features = std::make_shared<const FeatureMap>(load_features(features_dir));
  if (features->empty()) throw DatasetError("no .capf feature files in " + features_dir.string());
  check_compatible(model.config, vocab.size(), features->begin()->second.grid.dim(0),
                   features->begin()->second.grid.dim(1));
  const Dataset test = make_dataset(std::move(loaded.records), features, SplitTag::kTest);
  return evaluate_test_set(model, vocab, test, report);
}

std::string caption_file(const Model& model, const Vocab& vocab, const std::filesystem::path& feature_file) {
  const auto grid = read_capf(feature_file);
  if (grid.rank() != 2)
    throw FormatError(feature_file.string() + ": expected a rank-2 grid, got " + nd::shape_str(grid.shape()));
  check_compatible(model.config, vocab.size(), grid.dim(0), grid.dim(1));
  return decode(greedy_decode(model, grid, model.config.seq_len), vocab);
}

}  // namespace capgen
