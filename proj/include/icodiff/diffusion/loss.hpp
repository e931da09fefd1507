// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "icodiff/diffusion/schedule.hpp"
#include "icodiff/model/denoiser.hpp"

namespace icodiff {

template <class Real>
struct LossResult {
  double total = 0.0;
  double mse = 0.0;  // mean over batch of per-sample squared noise error
  double vlb = 0.0;  // mean over batch of per-sample KL / decoder terms
  // Parameter gradients in canonical for_each order; empty unless requested.
  std::vector<Tensor<Real>> grads;
};

// Hybrid denoising loss on one batch:
//   L = mean_i ||eps_i - eps_hat_i||^2 + lambda_vlb * L_vlb
// where L_vlb compares the true forward posterior against the model's
// N(mu_theta, sigma^2) with the mean path held constant — only the learned
// log-variance interpolation v receives gradient — and t = 1 rows contribute
// the Gaussian decoder term -log p(x0 | x1) instead of a KL.
//
// x0, eps_draws: (B, F, V_p); t_draws in 1..sched.T(); cond_drop[i] nonzero
// replaces ages[i] with NULL for that row. Throws NumericError naming the
// term if either term is non-finite.
template <class Real>
LossResult<Real> diffusion_loss(
    const DenoiserParamsT<Real>& params, const DenoiserConfig& cfg,
    const Tensor<Real>& x0, const std::vector<std::optional<double>>& ages,
    const std::vector<int>& t_draws, const Tensor<Real>& eps_draws,
    const std::vector<std::uint8_t>& cond_drop, const NoiseSchedule& sched,
    double lambda_vlb, bool want_grads);

// Convenience overload honoring the draw contract: timesteps uniform in
// 1..T antithetically paired within the batch, noise standard normal, and
// each row's condition dropped with probability p_uncond — all from
// deterministic substreams of (seed, step).
template <class Real>
LossResult<Real> diffusion_loss(
    const DenoiserParamsT<Real>& params, const DenoiserConfig& cfg,
    const Tensor<Real>& x0, const std::vector<std::optional<double>>& ages,
    const NoiseSchedule& sched, double lambda_vlb, double p_uncond,
    std::uint64_t seed, std::int64_t step, bool want_grads);

// Batch draw helpers (exposed for tests and the trainer).
// Antithetic pairing: even rows draw t ~ U{1..T}; each odd row mirrors the
// previous row as T + 1 - t.
std::vector<int> draw_timesteps(std::int64_t batch, int T, std::uint64_t seed,
                                std::int64_t step);
template <class Real>
Tensor<Real> draw_noise(Shape shape, std::uint64_t seed, std::int64_t step);
std::vector<std::uint8_t> draw_cond_drop(std::int64_t batch, double p_uncond,
                                         std::uint64_t seed, std::int64_t step);

}  // namespace icodiff
