#include "capgen/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "capgen/binio.hpp"
#include "capgen/errors.hpp"
#include "capgen/rng.hpp"
#include "capgen/specials.hpp"

namespace capgen {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

constexpr char kCapfMagic[6] = {'C', 'A', 'P', 'F', '1', '\0'};

}  // namespace

CaptionFormat detect_caption_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open captions file " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    return std::count(line.begin(), line.end(), '|') >= 2 ? CaptionFormat::kFlickrPipe : CaptionFormat::kTsv;
  }
  return CaptionFormat::kTsv;
}

CaptionLoad load_captions(const std::filesystem::path& path, CaptionFormat format, const LengthFilter& filter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open captions file " + path.string());

  CaptionLoad result;
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<CaptionRecord>> by_image;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    std::string image_id, caption;
    if (format == CaptionFormat::kFlickrPipe) {
      const auto p1 = line.find('|');
      const auto p2 = p1 == std::string::npos ? std::string::npos : line.find('|', p1 + 1);
      if (p2 == std::string::npos) fail("expected image_name|comment_number|comment");
      image_id = trim(std::string_view(line).substr(0, p1));
      const std::string number = trim(std::string_view(line).substr(p1 + 1, p2 - p1 - 1));
      caption = line.substr(p2 + 1);
      if (line_no == 1 && image_id == "image_name") continue;
      if (number.empty() || !std::all_of(number.begin(), number.end(), [](char c) { return c >= '0' && c <= '9'; }))
        fail("comment_number '" + number + "' is not a non-negative integer");
    } else {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) fail("expected image_name<TAB>caption");
      image_id = trim(std::string_view(line).substr(0, tab));
      // Flickr token files name captions "image.jpg#3".
      if (auto hash = image_id.rfind('#'); hash != std::string::npos && hash + 1 < image_id.size() &&
                                           std::all_of(image_id.begin() + static_cast<long>(hash) + 1, image_id.end(),
                                                       [](char c) { return c >= '0' && c <= '9'; }))
        image_id.resize(hash);
      caption = line.substr(tab + 1);
    }
    if (image_id.empty()) fail("empty image name");

    if (!by_image.count(image_id)) {
      order.push_back(image_id);
      by_image[image_id];
    }
    auto normalized = normalize_caption(caption);
    if (!normalized) {
      result.warnings.push_back(path.string() + ":" + std::to_string(line_no) + ": caption for " + image_id +
                                " rejected: empty after normalization");
      continue;
    }
    // Length bounds apply to the raw caption's whitespace tokens.
    const auto n_tokens = split_tokens(caption).size();
    if (!filter.accepts(n_tokens)) {
      result.warnings.push_back(path.string() + ":" + std::to_string(line_no) + ": caption for " + image_id +
                                " rejected: " + std::to_string(n_tokens) + " raw tokens outside [" +
                                std::to_string(filter.min_tokens) + ", " + std::to_string(filter.max_tokens) + "]");
      continue;
    }
    by_image[image_id].push_back(CaptionRecord{image_id, caption, *normalized, {}});
  }

  for (const auto& id : order) {
    auto& recs = by_image[id];
    if (recs.empty()) {
      result.warnings.push_back("image " + id + " dropped: no captions survived filtering");
      continue;
    }
    ++result.image_count;
    for (auto& r : recs) result.records.push_back(std::move(r));
  }
  return result;
}

void write_capf(const std::filesystem::path& path, const nd::Tensor<float>& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature file " + path.string());
  binio::Writer w(out);
  w.bytes(kCapfMagic, sizeof(kCapfMagic));
  w.u32(static_cast<std::uint32_t>(tensor.rank()));
  for (auto e : tensor.shape()) w.u32(static_cast<std::uint32_t>(e));
  w.f32s(tensor.data());
  if (!out) throw Error("failed writing feature file " + path.string());
}

nd::Tensor<float> read_capf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature file " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  binio::Reader r(buf, path.string());
  char magic[6];
  r.bytes(magic, sizeof(magic));
  if (!std::equal(magic, magic + 6, kCapfMagic)) throw FormatError(path.string() + ": bad magic, not a CAPF1 file");
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw FormatError(path.string() + ": implausible rank " + std::to_string(rank));
  nd::Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t e = r.u32();
    if (e == 0) throw FormatError(path.string() + ": zero extent");
    shape.push_back(e);
  }
  const std::size_t expected = nd::numel(shape) * 4;
  if (r.remaining() != expected)
    throw FormatError(path.string() + ": payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(expected));
  std::vector<float> data(nd::numel(shape));
  r.f32s(data);
  return nd::Tensor<float>(std::move(shape), std::move(data));
}

FeatureMap load_features(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DatasetError("feature directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".capf") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  FeatureMap out;
  std::optional<nd::Shape> common;
  for (const auto& file : files) {
    auto grid = read_capf(file);
    if (grid.rank() != 2)
      throw DatasetError(file.string() + ": feature grid must be rank 2, got " + nd::shape_str(grid.shape()));
    if (!common) common = grid.shape();
    if (grid.shape() != *common)
      throw DatasetError(file.string() + ": dims " + nd::shape_str(grid.shape()) + " differ from " +
                         nd::shape_str(*common));
    for (float v : grid.data())
      if (!std::isfinite(v)) throw DatasetError(file.string() + ": non-finite feature value");
    std::string id = file.filename().string();
    id.resize(id.size() - 5);
    out.emplace(id, FeatureRecord{id, std::move(grid)});
  }
  return out;
}

const char* split_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kVal: return "val";
    case SplitTag::kTest: return "test";
  }
  return "?";
}

std::size_t Dataset::feat_len() const {
  if (!features || features->empty()) return 0;
  return features->begin()->second.grid.dim(0);
}

std::size_t Dataset::feat_dim() const {
  if (!features || features->empty()) return 0;
  return features->begin()->second.grid.dim(1);
}

std::vector<std::string> Dataset::image_ids() const {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& r : records)
    if (seen.insert(r.image_id).second) ids.push_back(r.image_id);
  return ids;
}

std::map<std::string, std::vector<std::vector<std::string>>> Dataset::references() const {
  std::map<std::string, std::vector<std::vector<std::string>>> refs;
  for (const auto& r : records) refs[r.image_id].push_back(split_tokens(r.normalized));
  return refs;
}

Dataset make_dataset(std::vector<CaptionRecord> records, std::shared_ptr<const FeatureMap> features, SplitTag tag) {
  if (!features) throw DatasetError("dataset has no feature map");
  for (const auto& r : records)
    if (!features->count(r.image_id)) throw DatasetError("missing feature file for image " + r.image_id);
  return Dataset{std::move(records), std::move(features), tag};
}

void encode_records(std::vector<CaptionRecord>& records, const Vocab& vocab, std::size_t seq_len) {
  for (auto& r : records) r.token_ids = encode(r.normalized, vocab, seq_len);
}

SplitCounts default_split_counts(std::size_t n_images) {
  if (n_images >= kFlickr30kSplit.total()) return kFlickr30kSplit;
  SplitCounts c;
  c.train = n_images * 800 / 1000;
  c.val = n_images * 196 / 1000;
  c.test = n_images - c.train - c.val;
  return c;
}

Splits split_dataset(const std::vector<CaptionRecord>& records, std::uint64_t seed, const SplitCounts& counts) {
  std::set<std::string> unique;
  for (const auto& r : records) unique.insert(r.image_id);
  if (counts.total() > unique.size())
    throw ConfigError("split counts " + std::to_string(counts.train) + "/" + std::to_string(counts.val) + "/" +
                      std::to_string(counts.test) + " exceed the " + std::to_string(unique.size()) +
                      " available images");
  std::vector<std::string> ids(unique.begin(), unique.end());
  Rng rng(seed);
  rng.shuffle(ids);
  std::unordered_map<std::string, SplitTag> assign;
  for (std::size_t i = 0; i < counts.total(); ++i)
    assign[ids[i]] = i < counts.train ? SplitTag::kTrain
                     : i < counts.train + counts.val ? SplitTag::kVal
                                                     : SplitTag::kTest;
  Splits out;
  for (const auto& r : records) {
    auto it = assign.find(r.image_id);
    if (it == assign.end()) continue;
    switch (it->second) {
      case SplitTag::kTrain: out.train.push_back(r); break;
      case SplitTag::kVal: out.val.push_back(r); break;
      case SplitTag::kTest: out.test.push_back(r); break;
    }
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n_records, std::uint64_t shuffle_seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n_records);
  for (std::size_t i = 0; i < n_records; ++i) order[i] = i;
  Rng rng(shuffle_seed, epoch);
  rng.shuffle(order);
  return order;
}

Batch assemble_batch(const Dataset& data, const std::vector<std::size_t>& record_indices) {
  if (record_indices.empty()) throw ContractError("cannot assemble an empty batch");
  const std::size_t b = record_indices.size();
  const std::size_t len = data.feat_len(), dim = data.feat_dim();
  const std::size_t seq = data.records.at(record_indices[0]).token_ids.size();
  if (seq < 2) throw ContractError("records must be encoded before batching");
  const std::size_t t = seq - 1;

  std::vector<float> feats(b * len * dim);
  std::vector<std::int32_t> in(b * t), tgt(b * t);
  std::vector<std::uint8_t> mask(b * t);
  for (std::size_t n = 0; n < b; ++n) {
    const auto& rec = data.records.at(record_indices[n]);
    if (rec.token_ids.size() != seq) throw ContractError("records in a batch must share one sequence length");
    const auto& grid = data.features->at(rec.image_id).grid;
    std::copy(grid.data().begin(), grid.data().end(), feats.begin() + static_cast<long>(n * len * dim));
    for (std::size_t i = 0; i < t; ++i) {
      in[n * t + i] = rec.token_ids[i];
      tgt[n * t + i] = rec.token_ids[i + 1];
      mask[n * t + i] = rec.token_ids[i + 1] != kPadId ? 1 : 0;
    }
  }
  return Batch{nd::Tensor<float>({b, len, dim}, std::move(feats)), nd::IndexTensor({b, t}, std::move(in)),
               nd::IndexTensor({b, t}, std::move(tgt)), nd::BoolTensor({b, t}, std::move(mask)), record_indices};
}

namespace {

std::vector<std::vector<std::size_t>> chunk(const std::vector<std::size_t>& order, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size)
    out.emplace_back(order.begin() + static_cast<long>(i),
                     order.begin() + static_cast<long>(std::min(order.size(), i + batch_size)));
  return out;
}

}  // namespace

std::vector<Batch> epoch_batches(const Dataset& data, std::size_t batch_size, std::uint64_t shuffle_seed,
                                 std::uint64_t epoch) {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  std::vector<Batch> out;
  for (const auto& idx : chunk(epoch_order(data.records.size(), shuffle_seed, epoch), batch_size))
    out.push_back(assemble_batch(data, idx));
  return out;
}

BatchStream::BatchStream(const Dataset& data, std::size_t batch_size, std::uint64_t shuffle_seed, std::uint64_t epoch,
                         std::size_t capacity)
    : data_(data), capacity_(std::max<std::size_t>(capacity, 2)) {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  worker_ = std::thread(&BatchStream::produce, this, epoch_order(data.records.size(), shuffle_seed, epoch), batch_size);
}

BatchStream::~BatchStream() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void BatchStream::produce(std::vector<std::size_t> order, std::size_t batch_size) {
  try {
    for (const auto& idx : chunk(order, batch_size)) {
      Batch batch = assemble_batch(data_, idx);
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stop_ || queue_.size() < capacity_; });
      if (stop_) return;
      queue_.push_back(std::move(batch));
      cv_.notify_all();
    }
  } catch (...) {
    std::lock_guard lock(mu_);
    error_ = std::current_exception();
  }
  std::lock_guard lock(mu_);
  done_ = true;
  cv_.notify_all();
}

std::optional<Batch> BatchStream::next() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return !queue_.empty() || done_; });
  if (!queue_.empty()) {
    Batch b = std::move(queue_.front());
    queue_.pop_front();
    cv_.notify_all();
    return b;
  }
  if (error_) std::rethrow_exception(error_);
  return std::nullopt;
}

}  // namespace capgen
