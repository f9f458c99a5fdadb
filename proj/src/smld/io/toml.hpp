#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smld::io::toml {

// Minimal TOML subset sufficient for run configs: comments, [table] headers,
// bare/dotted keys, basic strings, integers, floats, booleans, and flat
// arrays of those. Keys are flattened to dotted paths ("distill.tau").
// No array-of-tables, no multi-line strings, no dates.
struct Value {
  enum class Kind { String, Int, Float, Bool, Array };
  Kind kind = Kind::String;
  std::string str;
  int64_t integer = 0;
  double number = 0;
  bool boolean = false;
  std::vector<Value> array;

  // typed accessors with config-error diagnostics; numeric kinds coerce
  std::string as_string(const std::string& key) const;
  int64_t as_int(const std::string& key) const;
  double as_double(const std::string& key) const;
  bool as_bool(const std::string& key) const;
  std::vector<int64_t> as_int_array(const std::string& key) const;
  std::vector<double> as_double_array(const std::string& key) const;
  std::vector<std::string> as_string_array(const std::string& key) const;
};

using Table = std::map<std::string, Value>;

Table parse_string(const std::string& text, const std::string& origin = "<config>");
Table parse_file(const std::string& path);

// Parses a single scalar/array literal the way a value after '=' is parsed;
// falls back to a plain string when nothing else matches. Used for CLI
// overrides.
Value parse_value_lenient(const std::string& text);

bool has_key(const Table& t, const std::string& key);

}  // namespace smld::io::toml
