// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "icodiff/dataio/manifest.hpp"
#include "icodiff/geom/icosphere.hpp"
#include "icodiff/metric_map.hpp"

namespace icodiff {

// Age-conditioned synthetic metric maps: random superpositions of eight
// plane waves pushed through tanh, with the spatial frequency kappa rising
// linearly in age — older maps are rougher, younger maps smoother. This is
// the learnable structure the conditional model and the age probe exercise.
struct SynthOptions {
  int n = 0;
  int level = 0;
  std::uint64_t seed = 0;
  double age_min = 24.0;
  double age_max = 45.0;
};

// One sample from substream (seed, "synth", index). All randomness — the
// age, the eight (weight, direction, phase) triples — comes from that
// stream, so any sample can be regenerated in isolation.
MetricMap synth_map(const IcoMesh& mesh, const SynthOptions& opt,
                    std::uint64_t index);

// Writes sample_%04u.smf files plus manifest.json into out_dir (created if
// missing), assigns splits, and returns the manifest (it does not compute
// normalization constants; the trainer owns those).
DatasetManifest synth_dataset(const SynthOptions& opt,
                              const std::string& out_dir);

// Mean squared difference across mesh edges; the roughness statistic whose
// age-monotonicity the generator is designed around.
double mesh_roughness(const MetricMap& map, const IcoMesh& mesh);

}  // namespace icodiff
