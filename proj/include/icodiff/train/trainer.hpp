// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "icodiff/train/checkpoint.hpp"

namespace icodiff {

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 0.0;
  int batch_size = 180;
  std::int64_t steps = 0;
  double ema_decay = 0.9999;
  double p_uncond = 0.1;
  double lambda_vlb = 0.001;
  std::uint64_t seed = 0;

  int t_steps = kDefaultT;
  double beta_min = kDefaultBetaMin;
  double beta_max = kDefaultBetaMax;

  // Patch geometry (patch_count/patch_len/t_steps) is derived from the
  // manifest level and low_level before use; set the architecture fields.
  DenoiserConfig model;
  int low_level = 1;

  std::string manifest_path;
  std::string out_dir;
  int checkpoint_every = 500;
  int metrics_every = 10;
};

void validate_train_config(const TrainConfig& cfg);

struct TrainResult {
  TrainState state;
  std::string checkpoint_path;  // rolling latest, in out_dir
  std::string metrics_path;     // line-delimited JSON records
};

// Runs the loop: draw batch -> normalize -> patchify -> hybrid loss with
// condition dropout -> AdamW -> EMA, with periodic checkpoints and metrics.
// Every random draw is keyed by (seed, purpose, step), so an interrupted run
// resumed from its checkpoint retraces the identical trajectory. A non-finite
// loss aborts with the last-good checkpoint left in place.
TrainResult train(const TrainConfig& cfg,
                  const std::function<void(std::int64_t, std::int64_t)>&
                      progress = {});
TrainResult train(const TrainConfig& cfg, TrainState state,
                  const std::function<void(std::int64_t, std::int64_t)>&
                      progress = {});

}  // namespace icodiff
