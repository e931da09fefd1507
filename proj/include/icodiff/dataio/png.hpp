// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icodiff/geom/icosphere.hpp"
#include "icodiff/metric_map.hpp"

namespace icodiff {

// Pixel -> nearest-mesh-vertex index for a width x height equirectangular
// grid (row-major, top row = +90 deg latitude). The default implementation
// buckets vertices into a 3D grid and searches expanding shells; the brute
// variant scans all vertices and exists as its correctness oracle. Ties
// (equal angular distance) resolve to the lowest vertex index in both.
std::vector<std::int32_t> nearest_vertex_grid(const IcoMesh& mesh, int width,
                                              int height);
std::vector<std::int32_t> nearest_vertex_grid_brute(const IcoMesh& mesh,
                                                    int width, int height);

// Equirectangular projection of a map through a fixed blue-white-red scale
// anchored at the map's min/max (a constant map renders white).
void project_png(const MetricMap& map, const IcoMesh& mesh, int width,
                 int height, const std::string& path);

// Minimal RGB8 PNG writer (deflate via zlib).
void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& rgb);

}  // namespace icodiff
