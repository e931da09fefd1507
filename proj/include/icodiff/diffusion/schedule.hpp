// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "icodiff/core/tensor.hpp"

namespace icodiff {

// Forward-process constants, all 64-bit and 1-indexed by timestep t = 1..T
// (alpha_bar(0) is defined as 1 so the t = 1 posterior is exact: the
// posterior collapses onto x0 and beta_tilde(1) = 0).
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  NoiseSchedule(int T, std::vector<double> beta);

  int T() const { return T_; }
  double beta(int t) const { return beta_[idx(t)]; }
  double alpha(int t) const { return alpha_[idx(t)]; }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[idx(t)]; }
  double beta_tilde(int t) const { return beta_tilde_[idx(t)]; }
  double mean_coef_x0(int t) const { return c0_[idx(t)]; }
  double mean_coef_xt(int t) const { return ct_[idx(t)]; }

  // log-variance interpolation endpoint used by the learned covariance:
  // log beta_tilde with the t=1 entry replaced by the t=2 one
  // (beta_tilde(1) = 0 has no finite log; the t=1 step is deterministic
  // anyway, and the decoder term needs a usable variance).
  double log_beta(int t) const { return log_beta_[idx(t)]; }
  double log_beta_tilde_clipped(int t) const { return log_bt_clipped_[idx(t)]; }

  const std::vector<double>& betas() const { return beta_; }

 private:
  std::size_t idx(int t) const {
    if (t < 1 || t > T_)
      throw ArgumentError("schedule: t " + std::to_string(t) +
                          " outside 1.." + std::to_string(T_));
    return std::size_t(t - 1);
  }
  int T_ = 0;
  std::vector<double> beta_, alpha_, alpha_bar_, beta_tilde_, c0_, ct_;
  std::vector<double> log_beta_, log_bt_clipped_;
};

enum class ScheduleKind { kLinear };

// Linear beta from beta_min to beta_max inclusive (T = 1 uses beta_min).
NoiseSchedule make_schedule(int T, double beta_min, double beta_max,
                            ScheduleKind kind = ScheduleKind::kLinear);

constexpr int kDefaultT = 1000;
constexpr double kDefaultBetaMin = 1e-4;
constexpr double kDefaultBetaMax = 0.02;

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
template <class Real>
Tensor<Real> q_sample(const Tensor<Real>& x0, int t, const Tensor<Real>& eps,
                      const NoiseSchedule& sched);

// Mean and variance of q(x_{t-1} | x_t, x0).
template <class Real>
std::pair<Tensor<Real>, double> posterior_mean_variance(
    const Tensor<Real>& x0, const Tensor<Real>& x_t, int t,
    const NoiseSchedule& sched);

// x0 estimates are clipped to this many normalized units before the
// posterior mean is formed (data is z-scored).
constexpr double kX0Clip = 5.0;

// One ancestral step: reconstruct and clip x0-hat, take the posterior mean,
// add sigma*z with sigma^2 = exp(v log beta_t + (1-v) log beta_tilde_t)
// elementwise. z is ignored at t = 1 (that step is deterministic).
template <class Real>
Tensor<Real> reverse_step(const Tensor<Real>& x_t, int t,
                          const Tensor<Real>& eps_pred,
                          const Tensor<Real>& v_pred, const Tensor<Real>& z,
                          const NoiseSchedule& sched);

// KL(N(mu1, var1) || N(mu2, var2)) for scalars, in nats.
double kl_gaussian(double mu1, double var1, double mu2, double var2);

}  // namespace icodiff
