// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/rng.hpp"

#include <cmath>

namespace icodiff {

namespace philox {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0,
                       std::uint32_t k1) {
  const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
  const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
  const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
  const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
  ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

}  // namespace

std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t counter) {
  std::array<std::uint32_t, 4> ctr = {std::uint32_t(counter),
                                      std::uint32_t(counter >> 32), 0u, 0u};
  std::uint32_t k0 = std::uint32_t(key);
  std::uint32_t k1 = std::uint32_t(key >> 32);
  for (int r = 0; r < 10; ++r) {
    round_once(ctr, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return ctr;
}

}  // namespace philox

namespace {

// FNV-1a over the tag, then splitmix finalizers to spread (seed, tag, index)
// into a 64-bit stream key.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view tag,
                     std::uint64_t index) {
  key_ = mix(mix(seed) ^ fnv1a(tag)) ^ mix(index * 0x9E3779B97F4A7C15ull + 1);
}

std::uint32_t RngStream::next_u32() {
  if (buf_pos_ >= 4) {
    buf_ = philox::block(key_, counter_++);
    buf_pos_ = 0;
  }
  return buf_[buf_pos_++];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double RngStream::next_double() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

std::uint64_t RngStream::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t span = hi - lo + 1;
  if (span == 0) return next_u64();  // full range
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return lo + x % span;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller; u1 shifted away from zero so log stays finite.
  const double u1 = 1.0 - next_double();
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * 3.14159265358979323846 * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

}  // namespace icodiff
