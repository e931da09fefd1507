// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/dataio/normalize.hpp"

#include <cmath>

#include "icodiff/errors.hpp"

namespace icodiff {

std::pair<double, double> compute_norm_stats(
    const std::vector<MetricMap>& maps) {
  std::int64_t n = 0;
  double mean = 0.0;
  for (const auto& m : maps)
    for (float v : m.values) {
      mean += double(v);
      ++n;
    }
  if (n == 0) throw ArgumentError("normalize: no values to pool");
  mean /= double(n);
  double var = 0.0;
  for (const auto& m : maps)
    for (float v : m.values) {
      const double d = double(v) - mean;
      var += d * d;
    }
  var /= double(n);
  return {mean, std::sqrt(var)};
}

MetricMap normalize(const MetricMap& map, double mean, double stddev) {
  if (!(stddev > 0.0))
    throw ArgumentError("normalize: std must be positive");
  MetricMap out = map;
  for (auto& v : out.values) v = float((double(v) - mean) / stddev);
  out.norm_mean = mean;
  out.norm_std = stddev;
  return out;
}

MetricMap denormalize(const MetricMap& map, double mean, double stddev) {
  if (!(stddev > 0.0))
    throw ArgumentError("normalize: std must be positive");
  MetricMap out = map;
  for (auto& v : out.values) v = float(double(v) * stddev + mean);
  out.norm_mean.reset();
  out.norm_std.reset();
  return out;
}

}  // namespace icodiff
