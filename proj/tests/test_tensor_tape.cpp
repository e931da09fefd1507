// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include <doctest.h>

#include "icodiff/core/gradcheck.hpp"
#include "icodiff/core/tape.hpp"
#include "icodiff/core/tensor.hpp"
#include "icodiff/errors.hpp"
#include "icodiff/rng.hpp"

using namespace icodiff;

namespace {

TensorD randn(Shape shape, std::uint64_t index, double scale = 1.0) {
  RngStream rng(2024, "gradcheck", index);
  TensorD t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = rng.normal() * scale;
  return t;
}

TensorD positive(Shape shape, std::uint64_t index) {
  TensorD t = randn(std::move(shape), index, 0.5);
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = std::exp(t[i]) + 0.1;
  return t;
}

// Checks one op wrapped into a scalar via sum_all.
double check_op(
    const std::function<Tape<double>::Id(Tape<double>&,
                                         const std::vector<Tape<double>::Id>&)>& body,
    const std::vector<TensorD>& params, double h = 1e-5) {
  return gradcheck(
      [&](Tape<double>& tape, const std::vector<Tape<double>::Id>& ids) {
        return tape.sum_all(body(tape, ids));
      },
      params, h, 7);
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("shape bookkeeping and row-major indexing") {
  TensorF t(Shape{2, 3});
  CHECK(t.numel() == 6);
  t.at(1, 2) = 5.0f;
  CHECK(t[5] == 5.0f);
  t.at(0, 1) = 2.0f;
  CHECK(t[1] == 2.0f);
  CHECK(shape_numel(Shape{4, 5, 6}) == 120);
  CHECK(shape_str(Shape{4, 5}) == "(4, 5)");
}

TEST_CASE("cast converts element type and keeps values") {
  TensorD d(Shape{3}, {1.5, -2.0, 0.25});
  const TensorF f = d.cast<float>();
  CHECK(f[0] == 1.5f);
  CHECK(f[1] == -2.0f);
  CHECK(f[2] == 0.25f);
}

TEST_CASE("scalar tensors") {
  const TensorD s = TensorD::scalar(3.5);
  CHECK(s.numel() == 1);
  CHECK(s.shape().empty());
}

}  // TEST_SUITE

TEST_SUITE("tape") {

TEST_CASE("matmul forward agrees with a naive triple loop") {
  // Dual route: the BLAS-backed kernel vs direct summation.
  const TensorD a = randn({5, 7}, 1);
  const TensorD b = randn({7, 3}, 2);
  Tape<double> tape;
  const auto c = tape.value(tape.matmul(tape.leaf(a), tape.leaf(b)));
  for (std::int64_t i = 0; i < 5; ++i)
    for (std::int64_t j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < 7; ++k) acc += a.at(i, k) * b.at(k, j);
      CHECK(c.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("bmm forward agrees with per-batch naive matmul") {
  const TensorD a = randn({2, 3, 4}, 3);
  const TensorD b = randn({2, 4, 2}, 4);
  Tape<double> tape;
  const auto c = tape.value(tape.bmm(tape.leaf(a), tape.leaf(b)));
  for (std::int64_t n = 0; n < 2; ++n)
    for (std::int64_t i = 0; i < 3; ++i)
      for (std::int64_t j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (std::int64_t k = 0; k < 4; ++k)
          acc += a.at(n, i, k) * b.at(n, k, j);
        CHECK(c.at(n, i, j) == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("suffix broadcast add matches explicit expansion") {
  const TensorD x = randn({2, 3, 4}, 5);
  const TensorD bias = randn({4}, 6);
  Tape<double> tape;
  const auto y = tape.value(tape.add(tape.leaf(x), tape.leaf(bias)));
  for (std::int64_t i = 0; i < x.numel(); ++i)
    CHECK(y[i] == x[i] + bias[i % 4]);
}

TEST_CASE("softmax rows are simplex points; symmetric input is uniform") {
  Tape<double> tape;
  const auto y =
      tape.value(tape.softmax(tape.leaf(TensorD(Shape{2, 2}, {0, 0, 3, 3}))));
  for (std::int64_t i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(0.5));
}

TEST_CASE("layernorm output has zero mean and unit variance per row") {
  const TensorD x = randn({3, 8}, 7, 2.0);
  Tape<double> tape;
  const auto y = tape.value(tape.layernorm(tape.leaf(x)));
  for (std::int64_t i = 0; i < 3; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::int64_t j = 0; j < 8; ++j) mean += y.at(i, j);
    mean /= 8;
    for (std::int64_t j = 0; j < 8; ++j) {
      const double c = y.at(i, j) - mean;
      var += c * c;
    }
    var /= 8;
    CHECK(std::fabs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps in denominator
  }
}

TEST_CASE("embedding gathers rows") {
  const TensorD table = randn({5, 3}, 8);
  Tape<double> tape;
  const auto y =
      tape.value(tape.embedding(tape.leaf(table), {3, 0, 3}));
  for (std::int64_t j = 0; j < 3; ++j) {
    CHECK(y.at(0, j) == table.at(3, j));
    CHECK(y.at(1, j) == table.at(0, j));
    CHECK(y.at(2, j) == table.at(3, j));
  }
}

TEST_CASE("shape mismatches throw ArgumentError") {
  Tape<double> tape;
  const auto a = tape.leaf(randn({2, 3}, 9));
  const auto b = tape.leaf(randn({2, 4}, 10));
  CHECK_THROWS_AS((void)tape.add(a, b), ArgumentError);
  CHECK_THROWS_AS((void)tape.matmul(a, a), ArgumentError);
}

TEST_CASE("non-finite results name the offending op") {
  Tape<double> tape;
  const auto x = tape.leaf(TensorD(Shape{2}, {-1.0, 2.0}));
  try {
    (void)tape.log_(x);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("log") != std::string::npos);
  }
}

}  // TEST_SUITE

TEST_SUITE("gradcheck") {

TEST_CASE("elementwise chains") {
  const std::vector<TensorD> p{randn({3, 4}, 11)};
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.mul_scalar(t.tanh_(ids[0]), 1.7);
        }, p) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.gelu(ids[0]);
        }, p) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.sigmoid(t.add_scalar(ids[0], 0.3));
        }, p) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.exp_(t.mul_scalar(ids[0], 0.5));
        }, p) < 1e-5);
}

TEST_CASE("positive-domain ops") {
  const std::vector<TensorD> p{positive({3, 3}, 12)};
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.log_(ids[0]);
        }, p) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.sqrt_(ids[0]);
        }, p) < 1e-5);
}

TEST_CASE("arithmetic, broadcast, and scalar ops") {
  const std::vector<TensorD> p{randn({2, 3, 4}, 13), randn({4}, 14),
                               randn({2, 3, 4}, 15)};
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.mul(t.add(ids[0], ids[1]), ids[2]);
        }, p) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.sub(ids[0], ids[2]);
        }, p) < 1e-5);
}

TEST_CASE("matmul and bmm differentiate through both operands") {
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.matmul(ids[0], ids[1]);
        }, {randn({4, 5}, 16), randn({5, 3}, 17)}) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.bmm(ids[0], ids[1]);
        }, {randn({2, 3, 4}, 18), randn({2, 4, 2}, 19)}) < 1e-5);
}

TEST_CASE("shape plumbing: permute, reshape, slice, concat, expand_middle") {
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.permute(ids[0], {1, 0, 2});
        }, {randn({2, 3, 4}, 20)}) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.mul(t.reshape(ids[0], {6, 4}), t.reshape(ids[0], {6, 4}));
        }, {randn({2, 3, 4}, 21)}) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.slice(ids[0], 1, 1, 2);
        }, {randn({2, 4, 3}, 22)}) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.mul(t.concat({ids[0], ids[1]}, 1), t.concat({ids[1], ids[0]}, 1));
        }, {randn({2, 2, 3}, 23), randn({2, 2, 3}, 24)}) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.mul(t.expand_middle(ids[0], 3), ids[1]);
        }, {randn({2, 4}, 25), randn({2, 3, 4}, 26)}) < 1e-5);
}

TEST_CASE("reductions, softmax, layernorm, embedding") {
  CHECK(gradcheck(
            [](Tape<double>& t, const std::vector<Tape<double>::Id>& ids) {
              return t.mean_all(t.mul(ids[0], ids[0]));
            },
            {randn({3, 4}, 27)}, 1e-5, 7) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.mul(t.softmax(ids[0]), ids[1]);
        }, {randn({3, 5}, 28), randn({3, 5}, 29)}) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.mul(t.layernorm(ids[0], ids[1], ids[2]), ids[3]);
        }, {randn({3, 6}, 30), randn({6}, 31), randn({6}, 32),
            randn({3, 6}, 33)}) < 1e-5);
  CHECK(check_op([](Tape<double>& t, const auto& ids) {
          return t.embedding(ids[0], {1, 3, 1});
        }, {randn({4, 5}, 34)}) < 1e-5);
}

}  // TEST_SUITE
