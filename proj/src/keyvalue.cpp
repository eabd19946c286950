#include "mchess/keyvalue.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "mchess/errors.hpp"

namespace mchess {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(const KeyValueDoc::Entry& e, const std::string& what) {
  std::ostringstream os;
  os << "line " << e.line << ", field '" << e.key << "': " << what;
  throw Error(ErrorCode::Parse, os.str());
}

}  // namespace

KeyValueDoc KeyValueDoc::parse(std::string_view text) {
  KeyValueDoc doc;
  int line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    Entry e{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
    if (e.key.empty()) throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": empty key");
    if (doc.index_.count(e.key)) fail(e, "duplicate key");
    doc.index_[e.key] = doc.entries_.size();
    doc.entries_.push_back(std::move(e));
  }
  return doc;
}

const KeyValueDoc::Entry* KeyValueDoc::find(const std::string& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::string KeyValueDoc::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

std::string KeyValueDoc::require_string(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw Error(ErrorCode::Parse, "missing required field '" + key + "'");
  return e->value;
}

long long KeyValueDoc::get_int(const std::string& key, long long fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
  if (ec != std::errc{} || ptr != e->value.data() + e->value.size()) fail(*e, "expected an integer");
  return v;
}

double KeyValueDoc::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(e->value, &used);
    if (used != e->value.size()) fail(*e, "expected a number");
    return v;
  } catch (const std::logic_error&) {
    fail(*e, "expected a number");
  }
}

bool KeyValueDoc::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  fail(*e, "expected true/false");
}

void KeyValueDoc::reject_unknown(const std::vector<std::string>& known) const {
  for (const auto& e : entries_) {
    if (std::find(known.begin(), known.end(), e.key) == known.end()) {
      throw Error(ErrorCode::InvalidConfig,
                  "line " + std::to_string(e.line) + ": unknown field '" + e.key + "'");
    }
  }
}

}  // namespace mchess
