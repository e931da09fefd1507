// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "icodiff/core/tape.hpp"

namespace icodiff {

// Builds a scalar loss on the given tape from leaves created for each
// parameter tensor (in order). Called once per finite-difference probe, so
// it must be deterministic given its inputs.
using GradCheckFn = std::function<Tape<double>::Id(
    Tape<double>&, const std::vector<Tape<double>::Id>&)>;

// Compares analytic tape gradients against central finite differences
// (f(θ+h) − f(θ−h)) / 2h on randomly sampled coordinates of each parameter
// (all coordinates when a tensor has at most `max_coords` of them).
// Returns the worst relative error, guarded by max(|a|, |b|, 1e−8).
// 64-bit only: the float path is too coarse for h in [1e−6, 1e−4].
double gradcheck(const GradCheckFn& f, const std::vector<TensorD>& params,
                 double h, std::uint64_t seed, std::int64_t max_coords = 64);

}  // namespace icodiff
