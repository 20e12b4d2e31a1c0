#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wfopt/errors.hpp"

namespace wfopt {

// Flat "key = value" text config. Raw value strings are preserved in file
// order so parse -> serialize -> parse is lossless.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::filesystem::path& path);
  static KeyValueConfig parse_text(const std::string& text, const std::string& origin = "<string>");

  std::string serialize() const;
  void write_file(const std::filesystem::path& path) const;

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  // keys the consumer never asked about; surfaced by `validate` as likely typos
  std::vector<std::string> unused_keys() const;

 private:
  std::string require(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
  mutable std::map<std::string, bool> touched_;
};

bool operator==(const KeyValueConfig& a, const KeyValueConfig& b);

}  // namespace wfopt
