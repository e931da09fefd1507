// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace icodiff {

// Counter-based RNG: Philox-4x32 with 10 rounds (Salmon et al. constants).
// Every stream is addressed by (seed, tag, index), so any draw in the
// project can be reproduced from those three values alone; there is no
// hidden global state and no dependence on thread scheduling.
//
// Round constants:
//   multipliers 0xD2511F53, 0xCD9E8D57
//   key schedule (Weyl)  0x9E3779B9, 0xBB67AE85
namespace philox {

std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t counter);

}  // namespace philox

// One independent stream of draws. Cheap to construct; construct a fresh one
// per (purpose, item) instead of sharing.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view tag, std::uint64_t index);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double next_double();
  double uniform(double lo, double hi);

  // Uniform integer on [lo, hi] inclusive, rejection sampled (no modulo bias).
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);

  // Standard normal via Box-Muller; pairs are cached.
  double normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;  // empty
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace icodiff
