#pragma once

// Shared helpers for the test binaries: scratch directories and the small
// caption/feature fixtures written to disk.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "capgen/datapipe.hpp"
#include "capgen/rng.hpp"
#include "capgen/tensor.hpp"
#include "capgen/transformer.hpp"

namespace capgen::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("capgen_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline nd::Tensor<float> random_grid(Rng& rng, std::size_t len, std::size_t dim) {
  nd::Tensor<float> t({len, dim});
  for (auto& v : t.data()) v = static_cast<float>(rng.normal());
  return t;
}

// Eight images, one caption each, Gaussian feature grids. Small enough to
// memorize in a few hundred epochs.
struct OverfitFixture {
  static constexpr std::size_t kFeatLen = 4;
  static constexpr std::size_t kFeatDim = 16;

  fs::path captions, features, vocab;
  std::vector<std::string> image_ids;
  std::vector<std::string> texts;

  static const std::vector<std::string>& captions_text() {
    static const std::vector<std::string> c = {
        "a dog runs across the green grass",      "two children play in the sand",
        "a man rides a red bicycle down the street", "a black cat sleeps on a sofa",
        "a woman reads a book in the park",       "three birds sit on a wire",
        "a boy jumps into the blue pool",         "an old man walks his dog on the beach"};
    return c;
  }

  explicit OverfitFixture(const fs::path& root, std::uint64_t seed = 1) {
    captions = root / "captions.txt";
    features = root / "features";
    vocab = root / "vocab.txt";
    fs::create_directories(features);
    std::string text = "image_name| comment_number| comment\n";
    Rng rng(seed);
    for (std::size_t i = 0; i < captions_text().size(); ++i) {
      const std::string id = "img" + std::to_string(i) + ".jpg";
      image_ids.push_back(id);
      texts.push_back(captions_text()[i]);
      text += id + "| 0| " + captions_text()[i] + "\n";
      write_capf(features / (id + ".capf"), random_grid(rng, kFeatLen, kFeatDim));
    }
    write_text(captions, text);
  }

  // Settings that memorize the fixture: d_model 64, 4 heads.
  static std::string config_text(std::size_t max_epochs = 500) {
    return "d_model = 64\nn_heads = 4\nffn_dim = 128\nseq_len = 12\nlearning_rate = 1e-3\nbatch_size = 8\n"
           "max_epochs = " + std::to_string(max_epochs) + "\npatience = " + std::to_string(max_epochs) +
           "\nsplit = all\n";
  }
};

// The fixture loaded in memory with the same model shape as config_text().
struct FixtureData {
  Vocab vocab;
  Dataset data;
  ModelConfig model;
};

inline FixtureData load_fixture(const OverfitFixture& fx, std::size_t seq_len = 12) {
  FixtureData out;
  auto load = load_captions(fx.captions, CaptionFormat::kFlickrPipe);
  std::vector<std::string> texts;
  for (const auto& r : load.records) texts.push_back(r.normalized);
  out.vocab = build_vocab(texts, 64);
  encode_records(load.records, out.vocab, seq_len);
  auto feats = std::make_shared<FeatureMap>(load_features(fx.features));
  out.data = make_dataset(std::move(load.records), feats, SplitTag::kTrain);
  out.model.d_model = 64;
  out.model.n_heads = 4;
  out.model.ffn_dim = 128;
  out.model.seq_len = seq_len;
  out.model.vocab_size = out.vocab.size();
  out.model.feat_len = OverfitFixture::kFeatLen;
  out.model.feat_dim = OverfitFixture::kFeatDim;
  return out;
}

}  // namespace capgen::testing
