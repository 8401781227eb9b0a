#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mamp {

// Flat view of a nested "key: value" config file, keyed by dotted paths
// ("arch.embed_dim"). std::map keeps iteration deterministic.
using FlatConfig = std::map<std::string, std::string>;

// Format: two-space indentation, "name:" opens a section, "name: value"
// assigns, '#' starts a comment, blank lines ignored. Tabs, bad indentation,
// and duplicate keys are hard errors.
FlatConfig parse_config_text(const std::string& text, const std::string& origin);
FlatConfig parse_config_file(const std::string& path);

// Typed, consumption-tracked access. finish() rejects any key that was never
// read, making unknown keys a hard error.
class ConfigReader {
 public:
  ConfigReader(FlatConfig values, std::string origin)
      : values_(std::move(values)), origin_(std::move(origin)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  std::size_t get_size(const std::string& key, std::size_t fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback);
  std::string require_string(const std::string& key);

  void finish() const;  // throws ConfigError listing unconsumed keys

 private:
  std::string take(const std::string& key);

  FlatConfig values_;
  std::string origin_;
  std::set<std::string> consumed_;
};

}  // namespace mamp
