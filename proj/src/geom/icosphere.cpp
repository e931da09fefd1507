// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/geom/icosphere.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "icodiff/errors.hpp"

namespace icodiff {

namespace {

std::array<double, 3> normalized(std::array<double, 3> v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

IcoMesh base_icosahedron() {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  IcoMesh m;
  m.level = 0;
  m.vertices = {
      normalized({-1, p, 0}), normalized({1, p, 0}),   normalized({-1, -p, 0}),
      normalized({1, -p, 0}), normalized({0, -1, p}),  normalized({0, 1, p}),
      normalized({0, -1, -p}), normalized({0, 1, -p}), normalized({p, 0, -1}),
      normalized({p, 0, 1}),  normalized({-p, 0, -1}), normalized({-p, 0, 1}),
  };
  m.faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  rebuild_edges(m);
  return m;
}

std::int32_t midpoint(IcoMesh& mesh, MidpointMap& cache, std::int32_t a,
                      std::int32_t b) {
  const std::uint64_t key =
      (std::uint64_t(std::uint32_t(std::min(a, b))) << 32) |
      std::uint32_t(std::max(a, b));
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const auto& va = mesh.vertices[std::size_t(a)];
  const auto& vb = mesh.vertices[std::size_t(b)];
  mesh.vertices.push_back(
      normalized({va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]}));
  const auto id = std::int32_t(mesh.vertices.size() - 1);
  cache.emplace(key, id);
  return id;
}

}  // namespace

void rebuild_edges(IcoMesh& mesh) {
  std::set<std::array<std::int32_t, 2>> edges;
  for (const auto& f : mesh.faces) {
    for (int i = 0; i < 3; ++i) {
      const std::int32_t a = f[std::size_t(i)], b = f[std::size_t((i + 1) % 3)];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  mesh.edges.assign(edges.begin(), edges.end());
}

void subdivide_once(IcoMesh& mesh, MidpointMap* record) {
  MidpointMap cache;
  cache.reserve(mesh.edges.size() * 2);
  std::vector<std::array<std::int32_t, 3>> faces;
  faces.reserve(mesh.faces.size() * 4);
  for (const auto& f : mesh.faces) {
    const std::int32_t a = f[0], b = f[1], c = f[2];
    const std::int32_t mab = midpoint(mesh, cache, a, b);
    const std::int32_t mbc = midpoint(mesh, cache, b, c);
    const std::int32_t mca = midpoint(mesh, cache, c, a);
    faces.push_back({a, mab, mca});
    faces.push_back({b, mbc, mab});
    faces.push_back({c, mca, mbc});
    faces.push_back({mab, mbc, mca});
  }
  mesh.faces = std::move(faces);
  mesh.level += 1;
  if (record) *record = std::move(cache);
}

IcoMesh build_icosphere(int level) {
  if (level < 0) throw ArgumentError("icosphere: level must be non-negative");
  if (level > kMaxIcosphereLevel)
    throw ArgumentError("icosphere: level " + std::to_string(level) +
                        " above resource guard " +
                        std::to_string(kMaxIcosphereLevel));
  IcoMesh m = base_icosahedron();
  for (int k = 0; k < level; ++k) subdivide_once(m, nullptr);
  rebuild_edges(m);
  return m;
}

ValidationReport validate_mesh(const IcoMesh& mesh) {
  ValidationReport report;
  auto flag = [&report](const std::string& s) { report.violations.push_back(s); };

  const std::int64_t nv = std::int64_t(mesh.vertices.size());
  const std::int64_t nf = std::int64_t(mesh.faces.size());
  const std::int64_t ne = std::int64_t(mesh.edges.size());
  if (nv != icosphere_vertex_count(mesh.level))
    flag("vertex count " + std::to_string(nv) + " != 10*4^level+2");
  if (nf != icosphere_face_count(mesh.level))
    flag("face count " + std::to_string(nf) + " != 20*4^level");
  if (ne != icosphere_edge_count(mesh.level))
    flag("edge count " + std::to_string(ne) + " != 30*4^level");
  if (nv - ne + nf != 2)
    flag("Euler characteristic V-E+F = " + std::to_string(nv - ne + nf) +
         " != 2");

  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& v = mesh.vertices[i];
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (std::abs(n - 1.0) > 1e-12) {
      flag("vertex " + std::to_string(i) + " norm " + std::to_string(n) +
           " not unit within 1e-12");
      break;  // one representative is enough for a diagnostic
    }
  }

  // Edge sharing: every undirected face edge must appear in exactly 2 faces.
  std::map<std::array<std::int32_t, 2>, int> incidence;
  bool bad_index = false;
  for (const auto& f : mesh.faces) {
    for (int i = 0; i < 3; ++i) {
      const std::int32_t a = f[std::size_t(i)], b = f[std::size_t((i + 1) % 3)];
      if (a < 0 || b < 0 || a >= nv || b >= nv) bad_index = true;
      incidence[{std::min(a, b), std::max(a, b)}] += 1;
    }
  }
  if (bad_index) flag("face references a vertex index out of range");
  for (const auto& [e, count] : incidence) {
    if (count != 2) {
      flag("edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
           ") shared by " + std::to_string(count) + " faces, expected 2");
      break;
    }
  }

  if (!bad_index) {
    std::vector<int> degree(std::size_t(nv), 0);
    for (const auto& [e, count] : incidence) {
      (void)count;
      degree[std::size_t(e[0])] += 1;
      degree[std::size_t(e[1])] += 1;
    }
    for (std::int64_t i = 0; i < nv; ++i) {
      const int expect = i < 12 ? 5 : 6;
      if (degree[std::size_t(i)] != expect) {
        flag("vertex " + std::to_string(i) + " degree " +
             std::to_string(degree[std::size_t(i)]) + ", expected " +
             std::to_string(expect));
        break;
      }
    }

    for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
      const auto& f = mesh.faces[fi];
      const auto& a = mesh.vertices[std::size_t(f[0])];
      const auto& b = mesh.vertices[std::size_t(f[1])];
      const auto& c = mesh.vertices[std::size_t(f[2])];
      const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
      const double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
      const double nx = uy * vz - uz * vy;
      const double ny = uz * vx - ux * vz;
      const double nz = ux * vy - uy * vx;
      const double cx = (a[0] + b[0] + c[0]) / 3.0;
      const double cy = (a[1] + b[1] + c[1]) / 3.0;
      const double cz = (a[2] + b[2] + c[2]) / 3.0;
      if (cx * nx + cy * ny + cz * nz <= 0) {
        flag("face " + std::to_string(fi) + " winds inward");
        break;
      }
    }
  }

  return report;
}

void export_obj(const IcoMesh& mesh, std::ostream& out) {
  out.precision(17);
  for (const auto& v : mesh.vertices)
    out << "v " << v[0] << " " << v[1] << " " << v[2] << "\n";
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

}  // namespace icodiff
