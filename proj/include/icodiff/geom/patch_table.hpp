// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "icodiff/core/tensor.hpp"
#include "icodiff/metric_map.hpp"

namespace icodiff {

// Surface -> sequence map for a (high, low) icosphere level pair: for every
// low-level face, the high-level vertex indices lying on that face, in
// canonical row-major triangular-grid order from corner 0. Built by tracking
// subdivision provenance (the vertices inside a low face are exactly the
// ones generated by recursively splitting it), so boundary membership is
// combinatorial and exact rather than a floating-point containment test.
struct PatchTable {
  int high_level = 0;
  int low_level = 0;
  std::int64_t patch_len = 0;                      // V_p per patch
  std::vector<std::vector<std::int32_t>> patches;  // F_low x V_p
  std::vector<std::int32_t> multiplicity;          // per high-level vertex
};

// V_p = (2^d + 1)(2^d + 2)/2 for d = high - low subdivision rounds.
inline std::int64_t patch_vertex_count(int high, int low) {
  const std::int64_t n = std::int64_t(1) << (high - low);
  return (n + 1) * (n + 2) / 2;
}

// Inverts the patch-count arithmetic: F_low = 20*4^low and the triangular
// patch length above determine (high, low) uniquely. Throws ArgumentError
// when the pair does not correspond to any level pair.
std::pair<int, int> level_pair_for_patches(std::int64_t patch_count,
                                           std::int64_t patch_len);

PatchTable build_patch_table(int high, int low);

// Reads a cached table from `<cache_dir>/patch_<high>_<low>.bin` when it
// exists and matches the current mesh template; otherwise builds the table
// and writes the cache (best effort - failure to write is not an error).
PatchTable load_or_build_patch_table(int high, int low,
                                     const std::string& cache_dir);

// Gathers a metric map into the (F_low x V_p) patch matrix; shared vertices
// are duplicated into every containing patch.
TensorF patchify(const MetricMap& metric, const PatchTable& table);

// Scatters a patch matrix back to the grid; each vertex is the arithmetic
// mean of its occurrences (exact for equal occurrences, so it inverts
// patchify bit-exactly).
MetricMap unpatchify(const TensorF& patches, const PatchTable& table);

}  // namespace icodiff
