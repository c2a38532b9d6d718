#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace boml {

// Flat key = value configuration with dotted section prefixes. Lines
// starting with '#' are comments. Parse failures name the key and line.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          const std::vector<std::uint64_t>& fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }
  // Stable content hash of a subset of keys (shared-configuration audit).
  std::uint64_t hash_keys(const std::vector<std::string>& keys) const;
  std::string origin() const { return origin_; }

 private:
  std::map<std::string, std::string> kv_;
  std::map<std::string, int> lines_;
  std::string origin_;
};

}  // namespace boml
