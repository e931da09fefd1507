// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "icodiff/rng.hpp"

namespace icodiff {

namespace {

double eval(const GradCheckFn& f, const std::vector<TensorD>& params) {
  Tape<double> tape;
  std::vector<Tape<double>::Id> leaves;
  leaves.reserve(params.size());
  for (const TensorD& p : params) leaves.push_back(tape.leaf(p, true));
  return tape.value(f(tape, leaves))[0];
}

}  // namespace

double gradcheck(const GradCheckFn& f, const std::vector<TensorD>& params,
                 double h, std::uint64_t seed, std::int64_t max_coords) {
  if (!(h > 0)) throw ArgumentError("gradcheck: step size must be positive");

  // Analytic gradients from one taped evaluation.
  Tape<double> tape;
  std::vector<Tape<double>::Id> leaves;
  leaves.reserve(params.size());
  for (const TensorD& p : params) leaves.push_back(tape.leaf(p, true));
  tape.backward(f(tape, leaves));
  std::vector<TensorD> grads;
  grads.reserve(params.size());
  for (auto id : leaves) grads.push_back(tape.grad(id));
  tape.clear();

  double worst = 0.0;
  std::vector<TensorD> probe = params;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const std::int64_t n = params[pi].numel();
    std::vector<std::int64_t> coords;
    if (n <= max_coords) {
      coords.resize(std::size_t(n));
      for (std::int64_t i = 0; i < n; ++i) coords[std::size_t(i)] = i;
    } else {
      RngStream pick(seed, "gradcheck", std::uint64_t(pi));
      coords.resize(std::size_t(max_coords));
      for (auto& c : coords)
        c = std::int64_t(pick.uniform_int(0, std::uint64_t(n - 1)));
    }
    for (std::int64_t c : coords) {
      const double x0 = params[pi][c];
      probe[pi][c] = x0 + h;
      const double fp = eval(f, probe);
      probe[pi][c] = x0 - h;
      const double fm = eval(f, probe);
      probe[pi][c] = x0;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = grads[pi][c];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace icodiff
