// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace icodiff {

NoiseSchedule::NoiseSchedule(int T, std::vector<double> beta) : T_(T) {
  if (T < 1) throw ArgumentError("schedule: T must be >= 1");
  if (std::int64_t(beta.size()) != T)
    throw ArgumentError("schedule: beta length does not match T");
  beta_ = std::move(beta);
  alpha_.resize(beta_.size());
  alpha_bar_.resize(beta_.size());
  beta_tilde_.resize(beta_.size());
  c0_.resize(beta_.size());
  ct_.resize(beta_.size());
  log_beta_.resize(beta_.size());
  log_bt_clipped_.resize(beta_.size());
  double running = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double b = beta_[std::size_t(t - 1)];
    if (!(b > 0.0 && b < 1.0))
      throw ArgumentError("schedule: beta out of (0,1) at t=" + std::to_string(t));
    if (t > 1 && b < beta_[std::size_t(t - 2)])
      throw ArgumentError("schedule: beta must be non-decreasing");
    const double a = 1.0 - b;
    const double abar_prev = running;
    running *= a;
    alpha_[std::size_t(t - 1)] = a;
    alpha_bar_[std::size_t(t - 1)] = running;
    const double one_m = 1.0 - running;
    beta_tilde_[std::size_t(t - 1)] = b * (1.0 - abar_prev) / one_m;
    c0_[std::size_t(t - 1)] = std::sqrt(abar_prev) * b / one_m;
    ct_[std::size_t(t - 1)] = std::sqrt(a) * (1.0 - abar_prev) / one_m;
    log_beta_[std::size_t(t - 1)] = std::log(b);
  }
  for (int t = 1; t <= T; ++t) {
    const double bt = t == 1 ? beta_tilde_[std::size_t(std::min(1, T - 1))]
                             : beta_tilde_[std::size_t(t - 1)];
    // T = 1: only the deterministic final step exists; fall back to beta.
    log_bt_clipped_[std::size_t(t - 1)] =
        std::log(bt > 0.0 ? bt : beta_[std::size_t(t - 1)]);
  }
}

NoiseSchedule make_schedule(int T, double beta_min, double beta_max,
                            ScheduleKind kind) {
  if (T < 1) throw ArgumentError("schedule: T must be >= 1");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
    throw ArgumentError("schedule: need 0 < beta_min <= beta_max < 1");
  if (kind != ScheduleKind::kLinear)
    throw ArgumentError("schedule: unknown kind");
  std::vector<double> beta(std::size_t(T), 0.0);
  for (int t = 1; t <= T; ++t)
    beta[std::size_t(t - 1)] =
        T == 1 ? beta_min
               : beta_min + (beta_max - beta_min) * double(t - 1) / double(T - 1);
  return NoiseSchedule(T, std::move(beta));
}

template <class Real>
Tensor<Real> q_sample(const Tensor<Real>& x0, int t, const Tensor<Real>& eps,
                      const NoiseSchedule& sched) {
  if (!x0.same_shape(eps))
    throw ArgumentError("q_sample: x0 shape " + shape_str(x0.shape()) +
                        " vs eps " + shape_str(eps.shape()));
  const Real s0 = Real(std::sqrt(sched.alpha_bar(t)));
  const Real s1 = Real(std::sqrt(1.0 - sched.alpha_bar(t)));
  Tensor<Real> out(x0.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i)
    out[i] = s0 * x0[i] + s1 * eps[i];
  return out;
}

template <class Real>
std::pair<Tensor<Real>, double> posterior_mean_variance(
    const Tensor<Real>& x0, const Tensor<Real>& x_t, int t,
    const NoiseSchedule& sched) {
  if (!x0.same_shape(x_t))
    throw ArgumentError("posterior: x0 shape " + shape_str(x0.shape()) +
                        " vs x_t " + shape_str(x_t.shape()));
  const Real c0 = Real(sched.mean_coef_x0(t));
  const Real ct = Real(sched.mean_coef_xt(t));
  Tensor<Real> mean(x0.shape());
  for (std::int64_t i = 0; i < mean.numel(); ++i)
    mean[i] = c0 * x0[i] + ct * x_t[i];
  return {std::move(mean), sched.beta_tilde(t)};
}

template <class Real>
Tensor<Real> reverse_step(const Tensor<Real>& x_t, int t,
                          const Tensor<Real>& eps_pred,
                          const Tensor<Real>& v_pred, const Tensor<Real>& z,
                          const NoiseSchedule& sched) {
  if (!x_t.same_shape(eps_pred) || !x_t.same_shape(v_pred) ||
      !x_t.same_shape(z))
    throw ArgumentError("reverse_step: mismatched shapes");
  const double abar = sched.alpha_bar(t);
  const double inv_s0 = 1.0 / std::sqrt(abar);
  const double s1 = std::sqrt(1.0 - abar);
  const double c0 = sched.mean_coef_x0(t);
  const double ct = sched.mean_coef_xt(t);
  const double log_b = sched.log_beta(t);
  const double log_bt = sched.log_beta_tilde_clipped(t);
  Tensor<Real> out(x_t.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    double x0_hat = (double(x_t[i]) - s1 * double(eps_pred[i])) * inv_s0;
    x0_hat = std::clamp(x0_hat, -kX0Clip, kX0Clip);
    const double mean = c0 * x0_hat + ct * double(x_t[i]);
    if (t == 1) {
      out[i] = Real(mean);
    } else {
      const double v = double(v_pred[i]);
      const double sigma = std::exp(0.5 * (v * log_b + (1.0 - v) * log_bt));
      out[i] = Real(mean + sigma * double(z[i]));
    }
  }
  return out;
}

double kl_gaussian(double mu1, double var1, double mu2, double var2) {
  if (!(var1 > 0.0) || !(var2 > 0.0))
    throw ArgumentError("kl_gaussian: variances must be positive");
  return 0.5 * (std::log(var2 / var1) + (var1 + (mu1 - mu2) * (mu1 - mu2)) / var2 -
                1.0);
}

template Tensor<float> q_sample(const Tensor<float>&, int, const Tensor<float>&,
                                const NoiseSchedule&);
template Tensor<double> q_sample(const Tensor<double>&, int,
                                 const Tensor<double>&, const NoiseSchedule&);
template std::pair<Tensor<float>, double> posterior_mean_variance(
    const Tensor<float>&, const Tensor<float>&, int, const NoiseSchedule&);
template std::pair<Tensor<double>, double> posterior_mean_variance(
    const Tensor<double>&, const Tensor<double>&, int, const NoiseSchedule&);
template Tensor<float> reverse_step(const Tensor<float>&, int,
                                    const Tensor<float>&, const Tensor<float>&,
                                    const Tensor<float>&, const NoiseSchedule&);
template Tensor<double> reverse_step(const Tensor<double>&, int,
                                     const Tensor<double>&,
                                     const Tensor<double>&,
                                     const Tensor<double>&,
                                     const NoiseSchedule&);

}  // namespace icodiff
