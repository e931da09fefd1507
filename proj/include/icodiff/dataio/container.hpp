// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "icodiff/core/tensor.hpp"

namespace icodiff {

// Named-entry binary container used for checkpoints and cached patch
// tables: an ordered set of (name, typed payload) entries, little-endian
// throughout, with a magic header and per-entry length framing so
// truncation and type confusion are detected on load.
class Container {
 public:
  void put_bytes(const std::string& name, std::vector<std::uint8_t> data);
  void put_string(const std::string& name, const std::string& s);
  void put_i64(const std::string& name, const std::vector<std::int64_t>& v);
  void put_f32(const std::string& name, const TensorF& t);
  void put_f64(const std::string& name, const TensorD& t);

  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  std::vector<std::string> names() const;

  const std::vector<std::uint8_t>& bytes(const std::string& name) const;
  std::string string(const std::string& name) const;
  std::vector<std::int64_t> i64(const std::string& name) const;
  TensorF f32(const std::string& name) const;
  TensorD f64(const std::string& name) const;

  void save(const std::string& path) const;
  static Container load(const std::string& path);

 private:
  enum class Type : std::uint8_t {
    kBytes = 0,
    kString = 1,
    kI64 = 2,
    kF32Tensor = 3,
    kF64Tensor = 4,
  };
  struct Entry {
    Type type;
    std::vector<std::uint8_t> payload;
  };
  const Entry& get(const std::string& name, Type want) const;
  std::map<std::string, Entry> entries_;
};

}  // namespace icodiff
