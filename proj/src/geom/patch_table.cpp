// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/geom/patch_table.hpp"

#include <cstring>
#include <filesystem>

#include "icodiff/dataio/container.hpp"
#include "icodiff/geom/icosphere.hpp"

namespace icodiff {

namespace {

constexpr std::int64_t kPatchCacheVersion = 1;

inline std::size_t tri_index(std::int64_t i, std::int64_t j) {
  return std::size_t(i * (i + 1) / 2 + j);
}

std::int32_t lookup_midpoint(const MidpointMap& mids, std::int32_t a,
                             std::int32_t b) {
  const std::uint64_t key =
      (std::uint64_t(std::uint32_t(std::min(a, b))) << 32) |
      std::uint32_t(std::max(a, b));
  return mids.at(key);
}

// One refinement of a triangular index grid (side n -> 2n). New points at
// odd coordinates are the midpoints of their previous-level grid neighbours,
// which subdivision has just created; `mids` maps those edges to indices.
std::vector<std::int32_t> refine_grid(const std::vector<std::int32_t>& old,
                                      std::int64_t n, const MidpointMap& mids) {
  const std::int64_t m = 2 * n;
  std::vector<std::int32_t> out(tri_index(m, m) + 1);
  for (std::int64_t i = 0; i <= m; ++i) {
    for (std::int64_t j = 0; j <= i; ++j) {
      std::int32_t v;
      if (i % 2 == 0 && j % 2 == 0) {
        v = old[tri_index(i / 2, j / 2)];
      } else if (i % 2 == 1 && j % 2 == 0) {
        v = lookup_midpoint(mids, old[tri_index((i - 1) / 2, j / 2)],
                            old[tri_index((i + 1) / 2, j / 2)]);
      } else if (i % 2 == 0) {
        v = lookup_midpoint(mids, old[tri_index(i / 2, (j - 1) / 2)],
                            old[tri_index(i / 2, (j + 1) / 2)]);
      } else {
        v = lookup_midpoint(mids, old[tri_index((i - 1) / 2, (j - 1) / 2)],
                            old[tri_index((i + 1) / 2, (j + 1) / 2)]);
      }
      out[tri_index(i, j)] = v;
    }
  }
  return out;
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Hash of the canonical base mesh plus format version; guards cached tables
// against template or layout drift.
std::uint64_t template_hash() {
  const IcoMesh base = build_icosphere(0);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a(base.vertices.data(),
            base.vertices.size() * sizeof(base.vertices[0]), h);
  h = fnv1a(base.faces.data(), base.faces.size() * sizeof(base.faces[0]), h);
  h = fnv1a(&kPatchCacheVersion, sizeof(kPatchCacheVersion), h);
  return h;
}

void check_levels(int high, int low) {
  if (low < 0 || high <= low || high > kMaxIcosphereLevel)
    throw ArgumentError("patch table: need 0 <= low < high <= " +
                        std::to_string(kMaxIcosphereLevel) + ", got (" +
                        std::to_string(high) + "," + std::to_string(low) + ")");
}

}  // namespace

PatchTable build_patch_table(int high, int low) {
  check_levels(high, low);
  IcoMesh mesh = build_icosphere(0);
  for (int k = 0; k < low; ++k) subdivide_once(mesh, nullptr);

  // At the low level, each face's grid is its corner triple (n = 1 rows 0,1).
  std::vector<std::vector<std::int32_t>> grids(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    grids[f] = {mesh.faces[f][0], mesh.faces[f][1], mesh.faces[f][2]};

  std::int64_t n = 1;
  for (int k = low; k < high; ++k) {
    MidpointMap mids;
    subdivide_once(mesh, &mids);
    for (auto& g : grids) g = refine_grid(g, n, mids);
    n *= 2;
  }

  PatchTable table;
  table.high_level = high;
  table.low_level = low;
  table.patch_len = patch_vertex_count(high, low);
  table.patches = std::move(grids);
  table.multiplicity.assign(std::size_t(icosphere_vertex_count(high)), 0);
  for (const auto& patch : table.patches)
    for (std::int32_t v : patch) table.multiplicity[std::size_t(v)] += 1;
  return table;
}

PatchTable load_or_build_patch_table(int high, int low,
                                     const std::string& cache_dir) {
  check_levels(high, low);
  const std::string path =
      (std::filesystem::path(cache_dir) /
       ("patch_" + std::to_string(high) + "_" + std::to_string(low) + ".bin"))
          .string();
  const std::uint64_t want_hash = template_hash();
  if (std::filesystem::exists(path)) {
    try {
      Container c = Container::load(path);
      const auto meta = c.i64("meta");
      if (meta.size() == 4 && meta[0] == high && meta[1] == low &&
          std::uint64_t(meta[3]) == want_hash) {
        const auto flat = c.i64("patches");
        const auto mult = c.i64("multiplicity");
        PatchTable t;
        t.high_level = high;
        t.low_level = low;
        t.patch_len = meta[2];
        const std::int64_t faces = icosphere_face_count(low);
        if (std::int64_t(flat.size()) == faces * t.patch_len &&
            std::int64_t(mult.size()) == icosphere_vertex_count(high)) {
          t.patches.resize(std::size_t(faces));
          for (std::int64_t f = 0; f < faces; ++f) {
            auto& p = t.patches[std::size_t(f)];
            p.resize(std::size_t(t.patch_len));
            for (std::int64_t j = 0; j < t.patch_len; ++j)
              p[std::size_t(j)] = std::int32_t(flat[std::size_t(f * t.patch_len + j)]);
          }
          t.multiplicity.resize(mult.size());
          for (std::size_t i = 0; i < mult.size(); ++i)
            t.multiplicity[i] = std::int32_t(mult[i]);
          return t;
        }
      }
    } catch (const std::exception&) {
      // Stale or corrupt cache: fall through and rebuild.
    }
  }

  PatchTable t = build_patch_table(high, low);
  try {
    std::filesystem::create_directories(cache_dir);
    Container c;
    c.put_i64("meta", {high, low, t.patch_len, std::int64_t(want_hash)});
    std::vector<std::int64_t> flat;
    flat.reserve(t.patches.size() * std::size_t(t.patch_len));
    for (const auto& p : t.patches)
      for (std::int32_t v : p) flat.push_back(v);
    c.put_i64("patches", flat);
    std::vector<std::int64_t> mult(t.multiplicity.begin(), t.multiplicity.end());
    c.put_i64("multiplicity", mult);
    c.save(path);
  } catch (const std::exception&) {
    // Cache write is best effort; the in-memory table is still valid.
  }
  return t;
}

TensorF patchify(const MetricMap& metric, const PatchTable& table) {
  if (metric.level != table.high_level)
    throw ArgumentError("patchify: map level " + std::to_string(metric.level) +
                        " does not match table high level " +
                        std::to_string(table.high_level));
  if (std::int64_t(metric.values.size()) !=
      icosphere_vertex_count(metric.level))
    throw ArgumentError("patchify: value count does not match level");
  TensorF out({std::int64_t(table.patches.size()), table.patch_len});
  for (std::size_t f = 0; f < table.patches.size(); ++f) {
    const auto& patch = table.patches[f];
    float* row = out.data() + std::int64_t(f) * table.patch_len;
    for (std::size_t j = 0; j < patch.size(); ++j)
      row[j] = metric.values[std::size_t(patch[j])];
  }
  return out;
}

std::pair<int, int> level_pair_for_patches(std::int64_t patch_count,
                                           std::int64_t patch_len) {
  int low = -1;
  for (int l = 0, f = 20; l < 16; ++l, f *= 4)
    if (f == patch_count) { low = l; break; }
  int depth = -1;
  for (int d = 0; d < 16; ++d)
    if (((std::int64_t(1) << d) + 1) * ((std::int64_t(1) << d) + 2) / 2 ==
        patch_len) { depth = d; break; }
  if (low < 0 || depth < 0)
    throw ArgumentError("patch layout " + std::to_string(patch_count) + "x" +
                        std::to_string(patch_len) +
                        " does not match any icosphere level pair");
  return {low + depth, low};
}

MetricMap unpatchify(const TensorF& patches, const PatchTable& table) {
  const Shape want{std::int64_t(table.patches.size()), table.patch_len};
  if (patches.shape() != want)
    throw ArgumentError("unpatchify: matrix shape " + shape_str(patches.shape()) +
                        " does not match table " + shape_str(want));
  const std::int64_t nv = icosphere_vertex_count(table.high_level);
  std::vector<double> sums(std::size_t(nv), 0.0);
  for (std::size_t f = 0; f < table.patches.size(); ++f) {
    const auto& patch = table.patches[f];
    const float* row = patches.data() + std::int64_t(f) * table.patch_len;
    for (std::size_t j = 0; j < patch.size(); ++j)
      sums[std::size_t(patch[j])] += double(row[j]);
  }
  MetricMap map;
  map.level = table.high_level;
  map.values.resize(std::size_t(nv));
  for (std::int64_t v = 0; v < nv; ++v)
    map.values[std::size_t(v)] =
        float(sums[std::size_t(v)] / double(table.multiplicity[std::size_t(v)]));
  return map;
}

}  // namespace icodiff
