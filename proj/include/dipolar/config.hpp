#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dipolar/error.hpp"

namespace dipolar {

enum class ValueType { integer, real, text, real_list, integer_list };

inline std::string_view to_string(ValueType t) {
  switch (t) {
    case ValueType::integer: return "integer";
    case ValueType::real: return "real";
    case ValueType::text: return "text";
    case ValueType::real_list: return "list of reals";
    case ValueType::integer_list: return "list of integers";
  }
  return "?";
}

struct KeySpec {
  std::string name;
  ValueType type = ValueType::real;
  std::optional<std::string> default_value;  // absent means required
  std::string help;
};

struct ExperimentSpec {
  std::string name;
  std::string description;
  std::vector<KeySpec> keys;

  const KeySpec* find(std::string_view key) const {
    for (const auto& k : keys)
      if (k.name == key) return &k;
    return nullptr;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::optional<long long> parse_integer(std::string_view s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) return std::nullopt;
  return v;
}

inline std::optional<double> parse_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// A validated run configuration: one experiment section of flat `key = value`
/// lines. Values are kept as text and converted on access.
class RunConfig {
 public:
  RunConfig(const ExperimentSpec& spec, std::vector<std::pair<std::string, std::string>> given)
      : spec_(&spec), given_(std::move(given)) {
    std::map<std::string, bool> seen;
    for (const auto& [k, v] : given_) {
      const KeySpec* ks = spec.find(k);
      if (!ks) throw ConfigError(k, "unknown key for experiment '" + spec.name + "'");
      if (seen[k]) throw ConfigError(k, "given more than once");
      seen[k] = true;
      check_type(*ks, v);
      values_[k] = v;
    }
    for (const auto& ks : spec.keys) {
      if (values_.count(ks.name)) continue;
      if (!ks.default_value) throw ConfigError(ks.name, "missing required key");
      values_[ks.name] = *ks.default_value;
    }
  }

  const std::string& experiment() const { return spec_->name; }
  const ExperimentSpec& spec() const { return *spec_; }
  /// Keys as written in the file, in file order.
  const std::vector<std::pair<std::string, std::string>>& given() const { return given_; }
  /// Every key of the experiment with the value in force (file or default), in catalog order.
  std::vector<std::pair<std::string, std::string>> resolved() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& ks : spec_->keys) out.emplace_back(ks.name, values_.at(ks.name));
    return out;
  }

  std::string text(const std::string& key) const { return raw(key, ValueType::text); }
  long long integer(const std::string& key) const { return *detail::parse_integer(raw(key, ValueType::integer)); }
  double real(const std::string& key) const { return *detail::parse_real(raw(key, ValueType::real)); }
  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : detail::split_list(raw(key, ValueType::real_list))) out.push_back(*detail::parse_real(s));
    return out;
  }
  std::vector<long long> integers(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& s : detail::split_list(raw(key, ValueType::integer_list)))
      out.push_back(*detail::parse_integer(s));
    return out;
  }

  long long positive_integer(const std::string& key) const {
    const long long v = integer(key);
    if (v <= 0) throw ConfigError(key, "must be positive");
    return v;
  }
  double positive_real(const std::string& key) const {
    const double v = real(key);
    if (!(v > 0.0)) throw ConfigError(key, "must be positive");
    return v;
  }

 private:
  const std::string& raw(const std::string& key, ValueType want) const {
    const KeySpec* ks = spec_->find(key);
    if (!ks) throw ConfigError(key, "not a key of experiment '" + spec_->name + "'");
    if (ks->type != want) throw ConfigError(key, "accessed as " + std::string(to_string(want)));
    return values_.at(key);
  }

  static void check_type(const KeySpec& ks, const std::string& v) {
    auto fail = [&] { throw ConfigError(ks.name, "expected " + std::string(to_string(ks.type)) + ", got '" + v + "'"); };
    switch (ks.type) {
      case ValueType::integer:
        if (!detail::parse_integer(v)) fail();
        break;
      case ValueType::real:
        if (!detail::parse_real(v)) fail();
        break;
      case ValueType::text:
        if (v.empty()) fail();
        break;
      case ValueType::real_list: {
        const auto items = detail::split_list(v);
        if (items.empty()) fail();
        for (const auto& s : items)
          if (!detail::parse_real(s)) fail();
        break;
      }
      case ValueType::integer_list: {
        const auto items = detail::split_list(v);
        if (items.empty()) fail();
        for (const auto& s : items)
          if (!detail::parse_integer(s)) fail();
        break;
      }
    }
  }

  const ExperimentSpec* spec_;
  std::vector<std::pair<std::string, std::string>> given_;
  std::map<std::string, std::string> values_;
};

/// Raw section name and key/value pairs, before validation against a spec.
struct ConfigText {
  std::string section;
  std::vector<std::pair<std::string, std::string>> entries;
};

/// Parses `[section]` plus `key = value` lines; `#` starts a comment.
inline ConfigText parse_config_text(std::string_view text) {
  ConfigText out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("[section]", "malformed section header on line " + std::to_string(lineno));
      if (!out.section.empty()) throw ConfigError("[section]", "only one experiment section is allowed");
      out.section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(t, "expected 'key = value' on line " + std::to_string(lineno));
    }
    if (out.section.empty()) throw ConfigError(detail::trim(t.substr(0, eq)), "appears before the [experiment] section");
    std::string key = detail::trim(std::string_view(t).substr(0, eq));
    std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("", "empty key on line " + std::to_string(lineno));
    out.entries.emplace_back(std::move(key), std::move(value));
  }
  if (out.section.empty()) throw ConfigError("[section]", "no experiment section found");
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace dipolar
