// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/cli/toml.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "icodiff/errors.hpp"

namespace icodiff {

TomlValue TomlValue::of(std::string v) {
  TomlValue t;
  t.kind = Kind::kString;
  t.str = std::move(v);
  return t;
}

TomlValue TomlValue::of(std::int64_t v) {
  TomlValue t;
  t.kind = Kind::kInt;
  t.integer = v;
  return t;
}

TomlValue TomlValue::of(double v) {
  TomlValue t;
  t.kind = Kind::kFloat;
  t.real = v;
  return t;
}

TomlValue TomlValue::of(bool v) {
  TomlValue t;
  t.kind = Kind::kBool;
  t.boolean = v;
  return t;
}

std::string TomlValue::as_string(const std::string& key) const {
  if (kind != Kind::kString)
    throw ParseError("config key '" + key + "' must be a string");
  return str;
}

std::int64_t TomlValue::as_int(const std::string& key) const {
  if (kind != Kind::kInt)
    throw ParseError("config key '" + key + "' must be an integer");
  return integer;
}

double TomlValue::as_float(const std::string& key) const {
  if (kind == Kind::kFloat) return real;
  if (kind == Kind::kInt) return double(integer);
  throw ParseError("config key '" + key + "' must be a number");
}

bool TomlValue::as_bool(const std::string& key) const {
  if (kind != Kind::kBool)
    throw ParseError("config key '" + key + "' must be true or false");
  return boolean;
}

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError("toml line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' &&
        c != '.')
      return false;
  return true;
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

TomlValue parse_value(const std::string& raw, int line) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\') {
        if (i + 2 >= raw.size()) fail(line, "dangling escape");
        ++i;
        switch (raw[i]) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: fail(line, std::string("unsupported escape \\") + raw[i]);
        }
      } else if (raw[i] == '"') {
        fail(line, "unescaped quote inside string");
      } else {
        out += raw[i];
      }
    }
    return TomlValue::of(std::move(out));
  }
  if (raw == "true") return TomlValue::of(true);
  if (raw == "false") return TomlValue::of(false);

  bool integral = !raw.empty();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (i == 0 && (c == '+' || c == '-')) {
      if (raw.size() == 1) integral = false;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) { integral = false; break; }
  }
  if (integral) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(raw.c_str(), &end, 10);
    if (errno != 0 || end != raw.c_str() + raw.size())
      fail(line, "integer out of range: " + raw);
    return TomlValue::of(std::int64_t(v));
  }
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (raw.empty() || end != raw.c_str() + raw.size())
    fail(line, "unparseable value: " + raw);
  if (!std::isfinite(v)) fail(line, "non-finite number: " + raw);
  return TomlValue::of(v);
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::istringstream in(text);
  std::string rawline, prefix;
  int line = 0;
  while (std::getline(in, rawline)) {
    ++line;
    const std::string s = trim(strip_comment(rawline));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      prefix = trim(s.substr(1, s.size() - 2));
      if (!valid_key(prefix)) fail(line, "bad section name '" + prefix + "'");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (!valid_key(key)) fail(line, "bad key '" + key + "'");
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (table.count(full)) fail(line, "duplicate key '" + full + "'");
    table[full] = parse_value(trim(s.substr(eq + 1)), line);
  }
  return table;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

namespace {

std::string format_value(const TomlValue& v) {
  switch (v.kind) {
    case TomlValue::Kind::kString: {
      std::string out = "\"";
      for (char c : v.str) {
        if (c == '"') out += "\\\"";
        else if (c == '\\') out += "\\\\";
        else if (c == '\n') out += "\\n";
        else if (c == '\t') out += "\\t";
        else out += c;
      }
      out += '"';
      return out;
    }
    case TomlValue::Kind::kInt:
      return std::to_string(v.integer);
    case TomlValue::Kind::kFloat: {
      char buf[64];
      // Shortest representation that parses back to the same double.
      for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v.real);
        if (std::strtod(buf, nullptr) == v.real) break;
      }
      std::string out = buf;
      // Keep floats visually distinct from integers.
      if (out.find_first_of(".eE") == std::string::npos &&
          out.find("inf") == std::string::npos &&
          out.find("nan") == std::string::npos)
        out += ".0";
      return out;
    }
    case TomlValue::Kind::kBool:
      return v.boolean ? "true" : "false";
  }
  return "";
}

}  // namespace

std::string emit_toml(const TomlTable& table) {
  std::string out;
  // std::map ordering groups dotted keys after top-level ones per prefix
  // only by accident, so emit in two passes.
  for (const auto& [key, value] : table)
    if (key.find('.') == std::string::npos)
      out += key + " = " + format_value(value) + "\n";
  std::string section;
  for (const auto& [key, value] : table) {
    const std::size_t dot = key.find('.');
    if (dot == std::string::npos) continue;
    const std::string prefix = key.substr(0, dot);
    if (prefix != section) {
      out += "\n[" + prefix + "]\n";
      section = prefix;
    }
    out += key.substr(dot + 1) + " = " + format_value(value) + "\n";
  }
  return out;
}

}  // namespace icodiff
