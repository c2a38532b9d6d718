#include "boml/config.hpp"

#include <fstream>
#include <sstream>

#include "boml/errors.hpp"

namespace boml {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& what) {
  throw InputError("config parse error (" + origin + ":" + std::to_string(line) + "): " + what);
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(origin, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) parse_fail(origin, line_no, "empty key");
    if (cfg.kv_.count(key))
      parse_fail(origin, line_no,
                 "duplicate key '" + key + "' (first at line " +
                     std::to_string(cfg.lines_.at(key)) + ")");
    cfg.kv_[key] = value;
    cfg.lines_[key] = line_no;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config parse error: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw InputError("config: missing required key '" + key + "'");
  return it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw InputError("config: key '" + key + "' is not an integer: '" + it->second + "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw InputError("config: key '" + key + "' is not a number: '" + it->second + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError("config: key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<std::uint64_t> Config::get_u64_list(const std::string& key,
                                                const std::vector<std::uint64_t>& fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<std::uint64_t> out;
  std::istringstream in(it->second);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    const std::string t = trim(tok);
    if (t.empty()) continue;
    try {
      out.push_back(std::stoull(t));
    } catch (const std::exception&) {
      throw InputError("config: key '" + key + "' has non-integer element '" + t + "'");
    }
  }
  if (out.empty()) throw InputError("config: key '" + key + "' is an empty list");
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw InputError("config: missing required key '" + key + "'");
  std::vector<double> out;
  std::istringstream in(it->second);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    const std::string t = trim(tok);
    if (t.empty()) continue;
    try {
      out.push_back(std::stod(t));
    } catch (const std::exception&) {
      throw InputError("config: key '" + key + "' has non-numeric element '" + t + "'");
    }
  }
  if (out.empty()) throw InputError("config: key '" + key + "' is an empty list");
  return out;
}

std::uint64_t Config::hash_keys(const std::vector<std::string>& keys) const {
  // FNV-1a over "key=value;" in the given order.
  std::uint64_t h = 1469598103934665603ULL;
  auto mixin = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& k : keys) {
    mixin(k);
    mixin("=");
    mixin(get_string(k, ""));
    mixin(";");
  }
  return h;
}

}  // namespace boml
