#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mchess {

// Plain-text `key = value` documents. Blank lines and `#` comments are
// ignored; keys are unique. Shared by variant files and run configs.
class KeyValueDoc {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  static KeyValueDoc parse(std::string_view text);

  bool has(const std::string& key) const { return index_.count(key) != 0; }
  const Entry* find(const std::string& key) const;
  const std::vector<Entry>& entries() const { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws InvalidConfig naming the first key not in `known`.
  void reject_unknown(const std::vector<std::string>& known) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace mchess
