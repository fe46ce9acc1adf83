#pragma once

// Flat "key = value" settings merged from a config file and flag overrides.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "capgen/datapipe.hpp"
#include "capgen/trainer.hpp"
#include "capgen/transformer.hpp"

namespace capgen {

class RunConfig {
 public:
  RunConfig() = default;

  // Reads "key = value" lines; '#' starts a comment. Later sets override.
  void load_file(const std::filesystem::path& path);
  // Throws ConfigError for keys outside known_keys().
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback = {}) const;

  // Throws ConfigError listing every missing key.
  void require(const std::vector<std::string>& keys) const;

  // Architecture fields not derived from data (vocab size and feature dims are
  // filled in by the caller).
  ModelConfig model_config() const;
  TrainConfig train_config() const;
  LengthFilter length_filter() const;
  std::uint64_t seed() const;

  static const std::vector<std::string>& known_keys();

 private:
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  std::map<std::string, std::string> values_;
};

}  // namespace capgen
