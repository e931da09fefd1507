// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "icodiff/diffusion/schedule.hpp"
#include "icodiff/geom/patch_table.hpp"
#include "icodiff/metric_map.hpp"
#include "icodiff/model/denoiser.hpp"

namespace icodiff {

struct SampleRequest {
  int count = 1;
  std::optional<double> age_weeks;  // NULL -> purely unconditional
  double guidance = 2.0;            // w; ignored when age is NULL
  std::uint64_t seed = 0;
  int level = 0;  // icosphere level of the produced maps
};

struct SamplerStats {
  std::int64_t denoiser_calls = 0;
  std::int64_t denoiser_rows = 0;  // total batch rows across those calls
};

// eps_uncond + w * (eps_cond - eps_uncond), elementwise.
template <class Real>
Tensor<Real> guided_eps(const Tensor<Real>& eps_cond,
                        const Tensor<Real>& eps_uncond, double w);

// A denoiser as the chain sees it: given the current batch x and the chain
// timestep t in 1..T, produce noise and variance-interpolation predictions
// of the same shape.
template <class Real>
using DenoiseFn = std::function<void(const Tensor<Real>& x, int t,
                                     Tensor<Real>& eps_out,
                                     Tensor<Real>& v_out)>;

// Runs `count` independent ancestral chains over `sample_shape`-shaped
// states, batched into one tensor (count, ...). Each chain draws its
// starting noise and every step's injection from its own substream
// (seed, "chain", index), so results are independent of batch composition.
template <class Real>
Tensor<Real> ancestral_chain(std::int64_t count, const Shape& sample_shape,
                             const DenoiseFn<Real>& fn,
                             const NoiseSchedule& sched, std::uint64_t seed,
                             const std::function<void(int, int)>& progress = {});

// Wraps the transformer as a DenoiseFn with classifier-free guidance.
// With an age and w != 1, each step runs conditional and null rows together
// in a single doubled batch; v comes from the conditional branch. With no
// age the model runs purely unconditional and w is ignored.
template <class Real>
DenoiseFn<Real> make_guided_denoiser(const DenoiserParamsT<Real>& params,
                                     const DenoiserConfig& cfg,
                                     std::optional<double> age, double w,
                                     SamplerStats* stats = nullptr);

struct SampleOutput {
  std::vector<MetricMap> maps;
  SamplerStats stats;
};

// Full pipeline: noise -> ancestral chain in patch space -> unpatchify ->
// de-normalize with the training constants -> metadata. Throws StateError
// when norm constants are missing, ArgumentError when the request level
// does not match the patch table or the age is outside the config range.
SampleOutput sample(const DenoiserParams& params, const DenoiserConfig& cfg,
                    const NoiseSchedule& sched, const PatchTable& table,
                    const SampleRequest& req, std::optional<double> norm_mean,
                    std::optional<double> norm_std,
                    const std::function<void(int, int)>& progress = {});

}  // namespace icodiff
