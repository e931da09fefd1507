// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "icodiff/metric_map.hpp"

namespace icodiff {

// Pooled mean and population standard deviation over all vertices of all
// maps (the train split, by convention).
std::pair<double, double> compute_norm_stats(const std::vector<MetricMap>& maps);

// (x - mean) / std, recording the constants in the map's metadata.
MetricMap normalize(const MetricMap& map, double mean, double stddev);

// x * std + mean, clearing the recorded constants.
MetricMap denormalize(const MetricMap& map, double mean, double stddev);

}  // namespace icodiff
