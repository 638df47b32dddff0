#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace rydchirp {

// Flat `key = value` text configuration. Lines starting with '#' are comments.
// Every key must be consumed by a typed getter; leftovers are reported by
// require_all_consumed() so typos never pass silently.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, int value);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void require_all_consumed() const;

  // Canonical text: sorted keys, one per line. Stable across runs.
  std::string to_text() const;
  void save(const std::string& path) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

// 64-bit FNV-1a; used for content hashes of caches and configs.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

}  // namespace rydchirp
