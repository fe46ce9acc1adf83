#pragma once

// Caption/feature loading, image-level splits, and batch assembly with a
// background prefetcher.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "capgen/tensor.hpp"
#include "capgen/textpipe.hpp"

namespace capgen {

enum class CaptionFormat { kFlickrPipe, kTsv };

// Picks by content: a first row with at least two '|' separators is the
// Flickr30k pipe format, otherwise tab-separated.
CaptionFormat detect_caption_format(const std::filesystem::path& path);

struct CaptionLoad {
  std::vector<CaptionRecord> records;  // grouped by image, first-appearance order
  std::vector<std::string> warnings;   // rejected captions and dropped images
  std::size_t image_count = 0;
};

// Throws ParseError("<path>:<line>: ...") on a malformed row.
CaptionLoad load_captions(const std::filesystem::path& path, CaptionFormat format, const LengthFilter& filter = {});

struct FeatureRecord {
  std::string image_id;
  nd::Tensor<float> grid;  // [feat_len, feat_dim]
};

using FeatureMap = std::map<std::string, FeatureRecord>;

// CAPF1: "CAPF1\0", u32 rank, u32 extents[rank], little-endian f32 payload.
void write_capf(const std::filesystem::path& path, const nd::Tensor<float>& tensor);
nd::Tensor<float> read_capf(const std::filesystem::path& path);

// Loads every "<image_id>.capf" under dir. Grids must be rank 2, finite, and
// share one shape.
FeatureMap load_features(const std::filesystem::path& dir);

enum class SplitTag { kTrain, kVal, kTest };
const char* split_name(SplitTag tag);

struct Dataset {
  std::vector<CaptionRecord> records;
  std::shared_ptr<const FeatureMap> features;
  SplitTag split = SplitTag::kTrain;

  std::size_t feat_len() const;
  std::size_t feat_dim() const;
  // Distinct image ids in first-appearance order.
  std::vector<std::string> image_ids() const;
  // Normalized reference token lists per image.
  std::map<std::string, std::vector<std::vector<std::string>>> references() const;
};

// Throws DatasetError naming the first image without a feature grid.
Dataset make_dataset(std::vector<CaptionRecord> records, std::shared_ptr<const FeatureMap> features, SplitTag tag);

// Encodes every record's normalized caption in place.
void encode_records(std::vector<CaptionRecord>& records, const Vocab& vocab, std::size_t seq_len);

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
  std::size_t total() const { return train + val + test; }
};

// The standard Flickr30k image split.
inline constexpr SplitCounts kFlickr30kSplit{20915, 5124, 105};

// Flickr30k counts when at least 26144 images exist, otherwise 80 / 19.6 / 0.4 %
// (train and val floored, test takes the remainder).
SplitCounts default_split_counts(std::size_t n_images);

struct Splits {
  std::vector<CaptionRecord> train, val, test;
};

// Sorts distinct image ids, shuffles them by seed, then assigns the first
// counts.train images to train, the next counts.val to val, and so on. Every
// caption follows its image. Throws ConfigError when counts exceed images.
Splits split_dataset(const std::vector<CaptionRecord>& records, std::uint64_t seed, const SplitCounts& counts);

struct Batch {
  nd::Tensor<float> features;  // [B, feat_len, feat_dim]
  nd::IndexTensor input_ids;   // [B, T], T = seq_len - 1
  nd::IndexTensor target_ids;  // [B, T]
  nd::BoolTensor pad_mask;     // [B, T], false where target is <pad>
  std::vector<std::size_t> record_indices;
};

// Record order for one epoch, derived from (shuffle_seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n_records, std::uint64_t shuffle_seed, std::uint64_t epoch);

Batch assemble_batch(const Dataset& data, const std::vector<std::size_t>& record_indices);

// Synchronous reference: every batch of one epoch, final short batch kept.
std::vector<Batch> epoch_batches(const Dataset& data, std::size_t batch_size, std::uint64_t shuffle_seed,
                                 std::uint64_t epoch);

// Assembles batches on a producer thread into a bounded queue. Yields the same
// sequence as epoch_batches. Producer exceptions are rethrown from next().
class BatchStream {
 public:
  static constexpr std::size_t kDefaultCapacity = 2;

  BatchStream(const Dataset& data, std::size_t batch_size, std::uint64_t shuffle_seed, std::uint64_t epoch,
              std::size_t capacity = kDefaultCapacity);
  ~BatchStream();
  BatchStream(const BatchStream&) = delete;
  BatchStream& operator=(const BatchStream&) = delete;

  std::optional<Batch> next();

 private:
  void produce(std::vector<std::size_t> order, std::size_t batch_size);

  const Dataset& data_;
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Batch> queue_;
  bool done_ = false;
  bool stop_ = false;
  std::exception_ptr error_;
  std::thread worker_;
};

}  // namespace capgen
