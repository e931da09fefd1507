// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace icodiff {

// Minimal TOML subset for flat config files: bare keys, [section] headers
// (one level deep), strings, integers, floats, booleans, and # comments.
// Arrays, inline tables, dates, and multi-line strings are out of scope.
struct TomlValue {
  enum class Kind { kString, kInt, kFloat, kBool };
  Kind kind = Kind::kString;
  std::string str;
  std::int64_t integer = 0;
  double real = 0.0;
  bool boolean = false;

  static TomlValue of(std::string v);
  static TomlValue of(const char* v) { return of(std::string(v)); }
  static TomlValue of(std::int64_t v);
  static TomlValue of(double v);
  static TomlValue of(bool v);

  // Checked accessors; throw ParseError naming the expected type. Ints
  // promote to double where a float is expected.
  std::string as_string(const std::string& key) const;
  std::int64_t as_int(const std::string& key) const;
  double as_float(const std::string& key) const;
  bool as_bool(const std::string& key) const;
};

// Keys are fully qualified ("lr", "model.layers"); std::map keeps emission
// deterministic.
using TomlTable = std::map<std::string, TomlValue>;

// Throws ParseError with a line number on malformed input or duplicate keys.
TomlTable parse_toml(const std::string& text);
// Throws IoError when unreadable.
TomlTable parse_toml_file(const std::string& path);

// Top-level keys first, then one [section] per dotted prefix; floats are
// printed round-trip exactly. parse_toml(emit_toml(t)) == t.
std::string emit_toml(const TomlTable& table);

}  // namespace icodiff
