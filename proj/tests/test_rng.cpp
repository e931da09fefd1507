// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "icodiff/rng.hpp"

using namespace icodiff;

TEST_SUITE("rng") {

TEST_CASE("streams are pure functions of (seed, tag, index)") {
  RngStream a(7, "batch", 3), b(7, "batch", 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());
}

TEST_CASE("distinct coordinates give distinct streams") {
  RngStream base(7, "batch", 3);
  RngStream other_seed(8, "batch", 3);
  RngStream other_tag(7, "eps", 3);
  RngStream other_index(7, "batch", 4);
  const std::uint64_t v = base.next_u64();
  CHECK(v != other_seed.next_u64());
  CHECK(v != other_tag.next_u64());
  CHECK(v != other_index.next_u64());
}

TEST_CASE("next_double lands in [0, 1) and fills the unit interval") {
  RngStream r(11, "t", 0);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = r.next_double();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("uniform_int covers both endpoints and stays inside") {
  RngStream r(3, "split", 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t v = r.uniform_int(10, 17);
    CHECK(v >= 10);
    CHECK(v <= 17);
    seen.insert(v);
  }
  CHECK(seen.size() == 8);  // all eight values hit (p(miss) ~ 8*(7/8)^5000)
}

TEST_CASE("uniform_int with lo == hi is constant") {
  RngStream r(3, "split", 1);
  for (int i = 0; i < 10; ++i) CHECK(r.uniform_int(42, 42) == 42);
}

TEST_CASE("normal moments match N(0,1) within 5 standard errors") {
  RngStream r(99, "eps", 0);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) < 5.0 / std::sqrt(double(n)));           // se = 1/sqrt(n)
  CHECK(std::fabs(var - 1.0) < 5.0 * std::sqrt(2.0 / double(n)));  // se ~ sqrt(2/n)
}

TEST_CASE("philox block avalanche: one flipped counter bit changes the block") {
  const auto a = philox::block(123, 456);
  const auto b = philox::block(123, 457);
  CHECK(a != b);
  int differing = 0;
  for (int i = 0; i < 4; ++i)
    if (a[std::size_t(i)] != b[std::size_t(i)]) ++differing;
  CHECK(differing == 4);
}

}  // TEST_SUITE
