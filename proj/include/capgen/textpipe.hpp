#pragma once

// Caption text handling: normalization, word-level vocabulary, and fixed-length
// id encoding.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace capgen {

// Lowercases, strips ASCII punctuation, collapses whitespace, trims.
// Returns nullopt when nothing is left (the caller must report the rejection).
std::optional<std::string> normalize_caption(std::string_view raw);

std::vector<std::string> split_tokens(std::string_view normalized);

struct LengthFilter {
  std::size_t min_tokens = 2;
  std::size_t max_tokens = 50;
  bool accepts(std::size_t n) const { return n >= min_tokens && n <= max_tokens; }
};

class Vocab {
 public:
  // Specials only.
  Vocab();
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::int32_t id(std::string_view token) const;  // <unk> id when unknown
  bool contains(std::string_view token) const;
  const std::string& token(std::int32_t id) const;  // IndexError when out of range
  const std::vector<std::string>& tokens() const { return tokens_; }

  // One token per line, line number = id.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// Frequency-ranked (ties lexicographic) word vocab of at most max_size entries,
// specials included.
Vocab build_vocab(const std::vector<std::string>& normalized_captions, std::size_t max_size);

// <start> ids... <end> <pad>...; content truncated to seq_len - 2 tokens.
std::vector<std::int32_t> encode(std::string_view normalized, const Vocab& vocab, std::size_t seq_len);

// Joins tokens up to the first <end>, skipping <start> and <pad>.
std::string decode(const std::vector<std::int32_t>& ids, const Vocab& vocab);
std::vector<std::string> decode_tokens(const std::vector<std::int32_t>& ids, const Vocab& vocab);

struct CaptionRecord {
  std::string image_id;
  std::string raw;
  std::string normalized;
  std::vector<std::int32_t> token_ids;  // empty until encoded
};

// True when ids start with <start>, hold exactly one <end>, and only <pad> follows it.
bool well_formed_encoding(const std::vector<std::int32_t>& ids);

}  // namespace capgen
