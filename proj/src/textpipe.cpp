#include "capgen/textpipe.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "capgen/errors.hpp"
#include "capgen/specials.hpp"
#include "capgen/transformer.hpp"

namespace capgen {

namespace {

constexpr std::string_view kPunctuation = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::optional<std::string> normalize_caption(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (kPunctuation.find(c) != std::string_view::npos) continue;
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::vector<std::string> split_tokens(std::string_view normalized) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && is_space(normalized[i])) ++i;
    std::size_t j = i;
    while (j < normalized.size() && !is_space(normalized[j])) ++j;
    if (j > i) out.emplace_back(normalized.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{kPadToken, kStartToken, kEndToken, kUnkToken}) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const std::vector<std::string> specials{kPadToken, kStartToken, kEndToken, kUnkToken};
  if (tokens_.size() < specials.size() || !std::equal(specials.begin(), specials.end(), tokens_.begin()))
    throw FormatError("vocab must begin with <pad>, <start>, <end>, <unk>");
  if (tokens_.size() > kMaxVocabSize)
    throw ConfigError("vocab of " + std::to_string(tokens_.size()) + " tokens exceeds the 13000 cap");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw FormatError("vocab token " + std::to_string(i) + " is empty");
    if (!index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second)
      throw FormatError("duplicate vocab token '" + tokens_[i] + "'");
  }
}

std::int32_t Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw IndexError("token id " + std::to_string(id) + " out of range for vocab of " + std::to_string(size()));
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocab file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw Error("failed writing vocab file " + path.string());
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open vocab file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return Vocab(std::move(tokens));
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Vocab build_vocab(const std::vector<std::string>& normalized_captions, std::size_t max_size) {
  if (max_size < static_cast<std::size_t>(kNumSpecials) + 1)
    throw ConfigError("max vocab size must be at least 5, got " + std::to_string(max_size));
  if (max_size > kMaxVocabSize)
    throw ConfigError("max vocab size " + std::to_string(max_size) + " exceeds the 13000 cap");
  std::map<std::string, std::size_t> counts;
  for (const auto& caption : normalized_captions)
    for (auto& tok : split_tokens(caption)) ++counts[tok];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is already in lexicographic order, so a stable sort keeps ties ascending.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{kPadToken, kStartToken, kEndToken, kUnkToken};
  for (const auto& [tok, n] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(tok);
  }
  return Vocab(std::move(tokens));
}

std::vector<std::int32_t> encode(std::string_view normalized, const Vocab& vocab, std::size_t seq_len) {
  if (seq_len < 2) throw ConfigError("seq_len must be at least 2 to hold <start> and <end>");
  std::vector<std::int32_t> ids;
  ids.reserve(seq_len);
  ids.push_back(kStartId);
  for (const auto& tok : split_tokens(normalized)) {
    if (ids.size() + 1 >= seq_len) break;
    ids.push_back(vocab.id(tok));
  }
  ids.push_back(kEndId);
  ids.resize(seq_len, kPadId);
  return ids;
}

std::vector<std::string> decode_tokens(const std::vector<std::int32_t>& ids, const Vocab& vocab) {
  std::vector<std::string> out;
  for (auto id : ids) {
    const auto& tok = vocab.token(id);
    if (id == kEndId) break;
    if (id == kStartId || id == kPadId) continue;
    out.push_back(tok);
  }
  return out;
}

std::string decode(const std::vector<std::int32_t>& ids, const Vocab& vocab) {
  std::string out;
  for (const auto& tok : decode_tokens(ids, vocab)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

bool well_formed_encoding(const std::vector<std::int32_t>& ids) {
  if (ids.empty() || ids.front() != kStartId) return false;
  auto end = std::find(ids.begin(), ids.end(), kEndId);
  if (end == ids.end()) return false;
  for (auto it = ids.begin() + 1; it != end; ++it)
    if (*it == kPadId || *it == kStartId) return false;
  return std::all_of(end + 1, ids.end(), [](std::int32_t id) { return id == kPadId; });
}

}  // namespace capgen
