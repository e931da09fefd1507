// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

namespace icodiff {

// One scalar metric map on an icosphere grid: one 32-bit value per vertex.
// age_weeks is the conditioning covariate; norm_mean/norm_std record an
// applied normalization so samples can be mapped back to data units.
struct MetricMap {
  int level = 0;
  std::vector<float> values;
  std::optional<double> age_weeks;
  std::optional<double> norm_mean;
  std::optional<double> norm_std;
};

}  // namespace icodiff
