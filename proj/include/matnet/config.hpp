#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace matnet {

// Flat key=value text with [section] headers and '#' comments. Keys
// are stored as "section.key" ("" section = bare key). Serialization
// is canonical (sorted) so equal maps produce identical bytes.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set_int(const std::string& key, std::int64_t v) { values_[key] = std::to_string(v); }
  void set_double(const std::string& key, double v);
  void set_bool(const std::string& key, bool v) { values_[key] = v ? "true" : "false"; }

  std::string serialize() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace matnet
