#include "wfopt/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace wfopt {

namespace {
std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}
}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path.string());
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.index_.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.index_[key] = cfg.entries_.size();
    cfg.entries_.emplace_back(key, value);
  }
  return cfg;
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

void KeyValueConfig::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path.string());
  out << serialize();
  if (!out) throw IoError("config write failed: " + path.string());
}

bool KeyValueConfig::has(const std::string& key) const {
  touched_[key] = true;
  return index_.count(key) != 0;
}

std::string KeyValueConfig::require(const std::string& key) const {
  touched_[key] = true;
  const auto it = index_.find(key);
  if (it == index_.end()) throw ConfigError("missing required config key '" + key + "'");
  return entries_[it->second].second;
}

std::string KeyValueConfig::get_string(const std::string& key) const { return require(key); }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  touched_[key] = true;
  const auto it = index_.find(key);
  return it == index_.end() ? fallback : entries_[it->second].second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string raw = require(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + raw + "' is not a number");
  }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  touched_[key] = true;
  return index_.count(key) ? get_double(key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key) const {
  const std::string raw = require(key);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + raw + "' is not an integer");
  }
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  touched_[key] = true;
  return index_.count(key) ? get_int(key) : fallback;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
  touched_[key] = true;
  if (!index_.count(key)) return fallback;
  const long long v = get_int(key);
  if (v < 0) throw ConfigError("config key '" + key + "' must be >= 0");
  return static_cast<std::size_t>(v);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  touched_[key] = true;
  if (!index_.count(key)) return fallback;
  const std::string raw = entries_[index_.at(key)].second;
  if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
  if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
  throw ConfigError("config key '" + key + "': '" + raw + "' is not a boolean");
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  const auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
    return;
  }
  index_[key] = entries_.size();
  entries_.emplace_back(key, value);
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (!touched_.count(k)) out.push_back(k);
  return out;
}

bool operator==(const KeyValueConfig& a, const KeyValueConfig& b) { return a.entries() == b.entries(); }

}  // namespace wfopt
