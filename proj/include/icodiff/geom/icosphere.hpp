// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace icodiff {

// Icosahedral sphere mesh. Vertices are unit 3-vectors in 64-bit floats;
// faces wind consistently outward. Edges are derived and deduplicated,
// stored as (lo, hi) index pairs in ascending order.
struct IcoMesh {
  int level = 0;
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<std::int32_t, 3>> faces;
  std::vector<std::array<std::int32_t, 2>> edges;
};

inline std::int64_t icosphere_vertex_count(int level) {
  return 10 * (std::int64_t(1) << (2 * level)) + 2;
}
inline std::int64_t icosphere_face_count(int level) {
  return 20 * (std::int64_t(1) << (2 * level));
}
inline std::int64_t icosphere_edge_count(int level) {
  return 30 * (std::int64_t(1) << (2 * level));
}

constexpr int kMaxIcosphereLevel = 8;  // resource guard

// Midpoint vertices created in one subdivision round, keyed by
// (min_index << 32) | max_index of the parent edge.
using MidpointMap = std::unordered_map<std::uint64_t, std::int32_t>;

// Builds the mesh by recursive 4-way splitting from the golden-ratio base
// icosahedron. Parent vertices keep their indices; each midpoint is appended
// when first created and projected to the unit sphere immediately, so the
// first vertices of level k are bit-exactly the vertices of level k-1.
IcoMesh build_icosphere(int level);

// One 4-way split in place (level k -> k+1). Edges are left stale; callers
// refresh them via rebuild_edges. When `record` is non-null it receives this
// round's midpoint map (used for provenance-based patch construction).
void subdivide_once(IcoMesh& mesh, MidpointMap* record);

// Recomputes the deduplicated edge list from the faces.
void rebuild_edges(IcoMesh& mesh);

struct ValidationReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
};

// Checks every structural invariant (counts, Euler characteristic, unit
// norms, edge sharing, vertex degrees, outward winding); diagnostics only.
ValidationReport validate_mesh(const IcoMesh& mesh);

// ASCII OBJ (v/f records), for inspection only.
void export_obj(const IcoMesh& mesh, std::ostream& out);

}  // namespace icodiff
