// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icodiff/metric_map.hpp"

namespace icodiff {

// Surface-metric file, bit-exact by construction:
//   magic "SMF1" | u32 level | u32 vertex count | u32 channels |
//   f64 age_weeks (fixed quiet-NaN pattern when absent) |
//   vertex-major f32 payload
// All integers and floats little-endian. This artifact uses one channel.
constexpr std::uint64_t kSmfAgeAbsentBits = 0x7FF8000000000000ULL;

std::vector<std::uint8_t> serialize_smf(const MetricMap& map);
MetricMap parse_smf(const std::vector<std::uint8_t>& bytes,
                    const std::string& what = "smf");

void write_smf(const MetricMap& map, const std::string& path);
MetricMap read_smf(const std::string& path);

}  // namespace icodiff
