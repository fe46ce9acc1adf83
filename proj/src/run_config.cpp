#include "capgen/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "capgen/errors.hpp"

namespace capgen {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys{
      // paths
      "captions", "features", "vocab", "out", "checkpoint", "report", "feature",
      // model
      "d_model", "n_heads", "seq_len", "ffn_dim",
      // training
      "learning_rate", "beta1", "beta2", "eps", "batch_size", "max_epochs", "patience", "seed", "record_wall_time",
      // data
      "caption_format", "split", "split_train", "split_val", "split_test", "min_tokens", "max_tokens"};
  return keys;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      set(key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

void RunConfig::require(const std::vector<std::string>& keys) const {
  std::string missing;
  for (const auto& k : keys)
    if (get(k).empty()) missing += (missing.empty() ? "" : ", ") + k;
  if (!missing.empty()) throw ConfigError("missing required setting(s): " + missing);
}

std::size_t RunConfig::get_size(const std::string& key, std::size_t fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("setting '" + key + "' must be a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(out);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("setting '" + key + "' must be a number, got '" + v + "'");
  }
}

ModelConfig RunConfig::model_config() const {
  ModelConfig c;
  c.d_model = get_size("d_model", c.d_model);
  c.n_heads = get_size("n_heads", c.n_heads);
  c.seq_len = get_size("seq_len", c.seq_len);
  c.ffn_dim = get_size("ffn_dim", c.ffn_dim);
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = get_double("learning_rate", t.learning_rate);
  t.beta1 = get_double("beta1", t.beta1);
  t.beta2 = get_double("beta2", t.beta2);
  t.eps = get_double("eps", t.eps);
  t.batch_size = get_size("batch_size", t.batch_size);
  t.max_epochs = get_size("max_epochs", t.max_epochs);
  t.patience = get_size("patience", t.patience);
  t.seed = seed();
  const std::string wall = get("record_wall_time", "false");
  if (wall != "true" && wall != "false") throw ConfigError("record_wall_time must be true or false");
  t.record_wall_time = wall == "true";
  t.validate();
  return t;
}

LengthFilter RunConfig::length_filter() const {
  LengthFilter f;
  f.min_tokens = get_size("min_tokens", f.min_tokens);
  f.max_tokens = get_size("max_tokens", f.max_tokens);
  if (f.min_tokens > f.max_tokens) throw ConfigError("min_tokens exceeds max_tokens");
  return f;
}

std::uint64_t RunConfig::seed() const { return get_size("seed", 0); }

}  // namespace capgen
