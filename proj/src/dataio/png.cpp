// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/dataio/png.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "icodiff/errors.hpp"

namespace icodiff {

namespace {

constexpr double kPi = 3.14159265358979323846;

void pixel_direction(int px, int py, int width, int height, double dir[3]) {
  const double lon = (double(px) + 0.5) / double(width) * 2.0 * kPi - kPi;
  const double lat = kPi / 2.0 - (double(py) + 0.5) / double(height) * kPi;
  dir[0] = std::cos(lat) * std::cos(lon);
  dir[1] = std::cos(lat) * std::sin(lon);
  dir[2] = std::sin(lat);
}

void check_image_args(const IcoMesh& mesh, int width, int height) {
  if (width < 16 || height < 16)
    throw ArgumentError("png: width and height must be >= 16");
  if (mesh.vertices.empty()) throw ArgumentError("png: empty mesh");
}

}  // namespace

std::vector<std::int32_t> nearest_vertex_grid_brute(const IcoMesh& mesh,
                                                    int width, int height) {
  check_image_args(mesh, width, height);
  std::vector<std::int32_t> out(std::size_t(width) * std::size_t(height), 0);
  for (int py = 0; py < height; ++py) {
    for (int px = 0; px < width; ++px) {
      double d[3];
      pixel_direction(px, py, width, height, d);
      std::int32_t best = -1;
      double best_d2 = 1e30;
      for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto& v = mesh.vertices[i];
        const double dx = d[0] - v[0], dy = d[1] - v[1], dz = d[2] - v[2];
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < best_d2 || (d2 == best_d2 && std::int32_t(i) < best)) {
          best_d2 = d2;
          best = std::int32_t(i);
        }
      }
      out[std::size_t(py) * std::size_t(width) + std::size_t(px)] = best;
    }
  }
  return out;
}

std::vector<std::int32_t> nearest_vertex_grid(const IcoMesh& mesh, int width,
                                              int height) {
  check_image_args(mesh, width, height);
  // Bucket unit vertices into a G^3 grid over [-1, 1]^3 and search shells
  // outward; a cell at Chebyshev shell s is at least (s-1)*h away, so the
  // scan stops as soon as that bound exceeds the best distance found.
  const std::size_t nv = mesh.vertices.size();
  int G = 4;
  while (std::size_t(G) * std::size_t(G) * std::size_t(G) < nv && G < 64)
    G *= 2;
  const double h = 2.0 / double(G);
  auto cell_of = [&](double c) {
    int idx = int((c + 1.0) / h);
    return std::clamp(idx, 0, G - 1);
  };
  std::vector<std::vector<std::int32_t>> cells(
      std::size_t(G) * std::size_t(G) * std::size_t(G));
  auto cell_index = [&](int cx, int cy, int cz) {
    return (std::size_t(cx) * std::size_t(G) + std::size_t(cy)) *
               std::size_t(G) +
           std::size_t(cz);
  };
  for (std::size_t i = 0; i < nv; ++i) {
    const auto& v = mesh.vertices[i];
    cells[cell_index(cell_of(v[0]), cell_of(v[1]), cell_of(v[2]))].push_back(
        std::int32_t(i));
  }

  std::vector<std::int32_t> out(std::size_t(width) * std::size_t(height), 0);
  for (int py = 0; py < height; ++py) {
    for (int px = 0; px < width; ++px) {
      double d[3];
      pixel_direction(px, py, width, height, d);
      const int qx = cell_of(d[0]), qy = cell_of(d[1]), qz = cell_of(d[2]);
      std::int32_t best = -1;
      double best_d2 = 1e30;
      for (int s = 0; s < 2 * G; ++s) {
        if (best >= 0) {
          const double bound = (double(s) - 1.0) * h;
          if (bound > 0.0 && bound * bound > best_d2) break;
        }
        // All cells at Chebyshev distance exactly s from (qx, qy, qz).
        const int x0 = qx - s, x1 = qx + s;
        for (int cx = std::max(0, x0); cx <= std::min(G - 1, x1); ++cx) {
          for (int cy = std::max(0, qy - s); cy <= std::min(G - 1, qy + s);
               ++cy) {
            for (int cz = std::max(0, qz - s); cz <= std::min(G - 1, qz + s);
                 ++cz) {
              const int cd = std::max({std::abs(cx - qx), std::abs(cy - qy),
                                       std::abs(cz - qz)});
              if (cd != s) continue;
              for (std::int32_t vi : cells[cell_index(cx, cy, cz)]) {
                const auto& v = mesh.vertices[std::size_t(vi)];
                const double dx = d[0] - v[0], dy = d[1] - v[1],
                             dz = d[2] - v[2];
                const double d2 = dx * dx + dy * dy + dz * dz;
                if (d2 < best_d2 || (d2 == best_d2 && vi < best)) {
                  best_d2 = d2;
                  best = vi;
                }
              }
            }
          }
        }
      }
      out[std::size_t(py) * std::size_t(width) + std::size_t(px)] = best;
    }
  }
  return out;
}

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != std::size_t(width) * std::size_t(height) * 3)
    throw ArgumentError("png: pixel buffer size mismatch");

  // Filter-0 scanlines.
  std::vector<std::uint8_t> raw;
  raw.reserve(std::size_t(height) * (std::size_t(width) * 3 + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = rgb.data() + std::size_t(y) * std::size_t(width) * 3;
    raw.insert(raw.end(), row, row + std::size_t(width) * 3);
  }
  uLongf comp_cap = compressBound(uLong(raw.size()));
  std::vector<std::uint8_t> comp(comp_cap);
  if (compress2(comp.data(), &comp_cap, raw.data(), uLong(raw.size()), 9) !=
      Z_OK)
    throw IoError("png: deflate failed");
  comp.resize(comp_cap);

  std::vector<std::uint8_t> out;
  const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  out.insert(out.end(), sig, sig + 8);
  auto put_u32be = [&](std::vector<std::uint8_t>& buf, std::uint32_t v) {
    buf.push_back(std::uint8_t(v >> 24));
    buf.push_back(std::uint8_t(v >> 16));
    buf.push_back(std::uint8_t(v >> 8));
    buf.push_back(std::uint8_t(v));
  };
  auto chunk = [&](const char type[4], const std::vector<std::uint8_t>& data) {
    put_u32be(out, std::uint32_t(data.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = std::uint32_t(
        crc32(0, out.data() + crc_start, uInt(out.size() - crc_start)));
    put_u32be(out, crc);
  };
  std::vector<std::uint8_t> ihdr;
  put_u32be(ihdr, std::uint32_t(width));
  put_u32be(ihdr, std::uint32_t(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor RGB
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  chunk("IHDR", ihdr);
  chunk("IDAT", comp);
  chunk("IEND", {});

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("png: cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          std::streamsize(out.size()));
  if (!f) throw IoError("png: short write to " + path);
}

void project_png(const MetricMap& map, const IcoMesh& mesh, int width,
                 int height, const std::string& path) {
  if (map.values.size() != mesh.vertices.size())
    throw ArgumentError("png: map does not match mesh");
  const auto grid = nearest_vertex_grid(mesh, width, height);

  float lo = map.values[0], hi = map.values[0];
  for (float v : map.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = double(hi) - double(lo);

  std::vector<std::uint8_t> rgb(std::size_t(width) * std::size_t(height) * 3);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const float v = map.values[std::size_t(grid[p])];
    const double t = span > 0.0 ? (double(v) - double(lo)) / span : 0.5;
    // Diverging blue -> white -> red.
    double r, g, b;
    if (t < 0.5) {
      r = g = 2.0 * t;
      b = 1.0;
    } else {
      r = 1.0;
      g = b = 2.0 * (1.0 - t);
    }
    rgb[3 * p + 0] = std::uint8_t(std::lround(255.0 * std::clamp(r, 0.0, 1.0)));
    rgb[3 * p + 1] = std::uint8_t(std::lround(255.0 * std::clamp(g, 0.0, 1.0)));
    rgb[3 * p + 2] = std::uint8_t(std::lround(255.0 * std::clamp(b, 0.0, 1.0)));
  }
  write_png_rgb(path, width, height, rgb);
}

}  // namespace icodiff
