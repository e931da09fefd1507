// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icodiff/diffusion/schedule.hpp"
#include "icodiff/model/denoiser.hpp"

namespace icodiff {

// Everything needed to resume training or to sample: parameters, optimizer
// moments, EMA shadow, schedule, normalization constants, and the RNG
// coordinates (seed, step) — streams are stateless functions of those two,
// so storing them restores the exact random sequence.
struct TrainState {
  DenoiserConfig config;
  NoiseSchedule schedule;
  DenoiserParams params;
  DenoiserParams ema;
  std::vector<TensorF> adam_m;  // canonical for_each order
  std::vector<TensorF> adam_v;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  std::optional<double> norm_mean;
  std::optional<double> norm_std;
};

// Fresh state at step 0 with zero moments and EMA initialized to params.
TrainState init_train_state(const DenoiserConfig& cfg,
                            const NoiseSchedule& sched, std::uint64_t seed);

void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace icodiff
