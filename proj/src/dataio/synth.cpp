// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/dataio/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "icodiff/dataio/smf.hpp"
#include "icodiff/errors.hpp"
#include "icodiff/rng.hpp"

namespace icodiff {

MetricMap synth_map(const IcoMesh& mesh, const SynthOptions& opt,
                    std::uint64_t index) {
  if (!(opt.age_min < opt.age_max))
    throw ArgumentError("synth: need age_min < age_max");
  RngStream rng(opt.seed, "synth", index);
  const double age = rng.uniform(opt.age_min, opt.age_max);
  const double kappa =
      2.0 + 10.0 * (age - opt.age_min) / (opt.age_max - opt.age_min);

  constexpr int kWaves = 8;
  const double sigma_w = std::pow(double(kWaves), -0.25);  // Var = 1/sqrt(8)
  double w[kWaves], phi[kWaves];
  double k[kWaves][3];
  for (int j = 0; j < kWaves; ++j) {
    w[j] = sigma_w * rng.normal();
    double norm = 0.0;
    do {
      for (double& c : k[j]) c = rng.normal();
      norm = std::sqrt(k[j][0] * k[j][0] + k[j][1] * k[j][1] +
                       k[j][2] * k[j][2]);
    } while (norm < 1e-6);
    for (double& c : k[j]) c /= norm;
    phi[j] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  }

  MetricMap map;
  map.level = mesh.level;
  map.age_weeks = age;
  map.values.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    double acc = 0.0;
    for (int j = 0; j < kWaves; ++j) {
      const double dot = k[j][0] * v[0] + k[j][1] * v[1] + k[j][2] * v[2];
      acc += w[j] * std::sin(kappa * dot + phi[j]);
    }
    map.values.push_back(float(std::tanh(acc)));
  }
  return map;
}

DatasetManifest synth_dataset(const SynthOptions& opt,
                              const std::string& out_dir) {
  if (opt.n < 1) throw ArgumentError("synth: n must be >= 1");
  const IcoMesh mesh = build_icosphere(opt.level);
  std::filesystem::create_directories(out_dir);

  DatasetManifest manifest;
  manifest.level = opt.level;
  char name[32];
  for (int i = 0; i < opt.n; ++i) {
    MetricMap map = synth_map(mesh, opt, std::uint64_t(i));
    std::snprintf(name, sizeof(name), "sample_%04d.smf", i);
    write_smf(map, out_dir + "/" + name);
    manifest.entries.push_back({name, *map.age_weeks, "train"});
  }
  assign_splits(manifest.entries, opt.seed);
  save_manifest(manifest, out_dir + "/manifest.json");
  return manifest;
}

double mesh_roughness(const MetricMap& map, const IcoMesh& mesh) {
  if (int(map.values.size()) != int(mesh.vertices.size()))
    throw ArgumentError("roughness: map does not match mesh");
  if (mesh.edges.empty()) throw ArgumentError("roughness: mesh has no edges");
  double acc = 0.0;
  for (const auto& e : mesh.edges) {
    const double d = double(map.values[std::size_t(e[0])]) -
                     double(map.values[std::size_t(e[1])]);
    acc += d * d;
  }
  return acc / double(mesh.edges.size());
}

}  // namespace icodiff
