#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lsam {

// Minimal TOML subset: [section] headers, key = value lines, # comments,
// values limited to integers, floats, booleans, quoted strings, and flat
// arrays of those. Enough for the experiment config format; anything else
// is rejected loudly.
struct TomlValue {
  enum class Kind { integer, real, boolean, string, array };

  Kind kind = Kind::integer;
  std::int64_t int_v = 0;
  double real_v = 0.0;
  bool bool_v = false;
  std::string str_v;
  std::vector<TomlValue> array_v;

  // Numeric coercions (integers widen to double on demand).
  double as_real(const std::string& key) const;
  std::int64_t as_int(const std::string& key) const;
  bool as_bool(const std::string& key) const;
  const std::string& as_string(const std::string& key) const;
  const std::vector<TomlValue>& as_array(const std::string& key) const;
};

// Keys are dotted: "section.key".
using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml_text(const std::string& text);
TomlTable parse_toml_file(const std::string& path);

// Parses a single value literal (for --override key=value).
TomlValue parse_toml_value(const std::string& text);

}  // namespace lsam
