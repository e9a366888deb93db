#include "lsam/toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lsam/errors.hpp"

namespace lsam {
namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
    --end;
  }
  return s.substr(begin, end - begin);
}

// Removes a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '-')) {
      return false;
    }
  }
  return true;
}

TomlValue parse_scalar(const std::string& raw, int line_no) {
  const std::string text = trim(raw);
  if (text.empty()) {
    throw ConfigError("toml line " + std::to_string(line_no) +
                      ": empty value");
  }
  TomlValue v;
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') {
      throw ConfigError("toml line " + std::to_string(line_no) +
                        ": unterminated string");
    }
    v.kind = TomlValue::Kind::string;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
      if (text[i] == '\\' && i + 2 < text.size() &&
          (text[i + 1] == '"' || text[i + 1] == '\\')) {
        v.str_v.push_back(text[i + 1]);
        ++i;
      } else {
        v.str_v.push_back(text[i]);
      }
    }
    return v;
  }
  if (text == "true" || text == "false") {
    v.kind = TomlValue::Kind::boolean;
    v.bool_v = text == "true";
    return v;
  }
  const bool looks_integer =
      text.find_first_of(".eEnN") == std::string::npos;  // also bars inf/nan
  const char* begin = text.c_str();
  char* end = nullptr;
  if (looks_integer) {
    const long long parsed = std::strtoll(begin, &end, 10);
    if (end == begin + text.size()) {
      v.kind = TomlValue::Kind::integer;
      v.int_v = parsed;
      return v;
    }
  }
  const double parsed = std::strtod(begin, &end);
  if (end == begin + text.size()) {
    v.kind = TomlValue::Kind::real;
    v.real_v = parsed;
    return v;
  }
  throw ConfigError("toml line " + std::to_string(line_no) +
                    ": cannot parse value '" + text + "'");
}

TomlValue parse_value(const std::string& raw, int line_no) {
  const std::string text = trim(raw);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') {
      throw ConfigError("toml line " + std::to_string(line_no) +
                        ": unterminated array");
    }
    TomlValue v;
    v.kind = TomlValue::Kind::array;
    const std::string inner = text.substr(1, text.size() - 2);
    std::string item;
    bool in_string = false;
    for (char c : inner) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(item).empty()) v.array_v.push_back(parse_scalar(item, line_no));
        item.clear();
      } else {
        item.push_back(c);
      }
    }
    if (!trim(item).empty()) v.array_v.push_back(parse_scalar(item, line_no));
    return v;
  }
  return parse_scalar(text, line_no);
}

}  // namespace

double TomlValue::as_real(const std::string& key) const {
  if (kind == Kind::real) return real_v;
  if (kind == Kind::integer) return static_cast<double>(int_v);
  throw ConfigError("config key '" + key + "' must be a number");
}

std::int64_t TomlValue::as_int(const std::string& key) const {
  if (kind == Kind::integer) return int_v;
  throw ConfigError("config key '" + key + "' must be an integer");
}

bool TomlValue::as_bool(const std::string& key) const {
  if (kind == Kind::boolean) return bool_v;
  throw ConfigError("config key '" + key + "' must be a boolean");
}

const std::string& TomlValue::as_string(const std::string& key) const {
  if (kind == Kind::string) return str_v;
  throw ConfigError("config key '" + key + "' must be a string");
}

const std::vector<TomlValue>& TomlValue::as_array(
    const std::string& key) const {
  if (kind == Kind::array) return array_v;
  throw ConfigError("config key '" + key + "' must be an array");
}

TomlTable parse_toml_text(const std::string& text) {
  TomlTable table;
  std::istringstream stream(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string content = trim(strip_comment(line));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']') {
        throw ConfigError("toml line " + std::to_string(line_no) +
                          ": malformed section header");
      }
      section = trim(content.substr(1, content.size() - 2));
      if (!valid_key(section)) {
        throw ConfigError("toml line " + std::to_string(line_no) +
                          ": bad section name '" + section + "'");
      }
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("toml line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(content.substr(0, eq));
    if (!valid_key(key)) {
      throw ConfigError("toml line " + std::to_string(line_no) +
                        ": bad key '" + key + "'");
    }
    const std::string full_key = section.empty() ? key : section + "." + key;
    if (table.count(full_key) != 0) {
      throw ConfigError("toml line " + std::to_string(line_no) +
                        ": duplicate key '" + full_key + "'");
    }
    table[full_key] = parse_value(content.substr(eq + 1), line_no);
  }
  return table;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_toml_text(buffer.str());
}

TomlValue parse_toml_value(const std::string& text) {
  return parse_value(text, 0);
}

}  // namespace lsam
