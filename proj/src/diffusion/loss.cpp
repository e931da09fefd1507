// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/diffusion/loss.hpp"

#include <algorithm>
#include <cmath>

#include "icodiff/rng.hpp"

namespace icodiff {

std::vector<int> draw_timesteps(std::int64_t batch, int T, std::uint64_t seed,
                                std::int64_t step) {
  if (batch < 1) throw ArgumentError("loss: batch must be >= 1");
  if (T < 1) throw ArgumentError("loss: T must be >= 1");
  RngStream rng(seed, "t", std::uint64_t(step));
  std::vector<int> t(std::size_t(batch), 0);
  for (std::int64_t i = 0; i < batch; ++i) {
    if (i % 2 == 0)
      t[std::size_t(i)] = int(rng.uniform_int(1, T));
    else
      t[std::size_t(i)] = T + 1 - t[std::size_t(i - 1)];
  }
  return t;
}

template <class Real>
Tensor<Real> draw_noise(Shape shape, std::uint64_t seed, std::int64_t step) {
  RngStream rng(seed, "eps", std::uint64_t(step));
  Tensor<Real> out(std::move(shape));
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = Real(rng.normal());
  return out;
}

std::vector<std::uint8_t> draw_cond_drop(std::int64_t batch, double p_uncond,
                                         std::uint64_t seed,
                                         std::int64_t step) {
  if (p_uncond < 0.0 || p_uncond > 1.0)
    throw ArgumentError("loss: p_uncond must be in [0,1]");
  RngStream rng(seed, "drop", std::uint64_t(step));
  std::vector<std::uint8_t> drop(std::size_t(batch), 0);
  for (std::int64_t i = 0; i < batch; ++i)
    drop[std::size_t(i)] = rng.uniform(0.0, 1.0) < p_uncond ? 1 : 0;
  return drop;
}

template <class Real>
LossResult<Real> diffusion_loss(
    const DenoiserParamsT<Real>& params, const DenoiserConfig& cfg,
    const Tensor<Real>& x0, const std::vector<std::optional<double>>& ages,
    const std::vector<int>& t_draws, const Tensor<Real>& eps_draws,
    const std::vector<std::uint8_t>& cond_drop, const NoiseSchedule& sched,
    double lambda_vlb, bool want_grads) {
  using Id = typename Tape<Real>::Id;
  if (x0.rank() != 3)
    throw ArgumentError("loss: x0 must be (B, F, V_p), got " +
                        shape_str(x0.shape()));
  const std::int64_t B = x0.dim(0), F = x0.dim(1), Vp = x0.dim(2);
  const std::int64_t dim = F * Vp;
  if (!x0.same_shape(eps_draws))
    throw ArgumentError("loss: eps_draws shape mismatch");
  if (std::int64_t(ages.size()) != B || std::int64_t(t_draws.size()) != B ||
      std::int64_t(cond_drop.size()) != B)
    throw ArgumentError("loss: per-row lists must match batch size");
  if (sched.T() > cfg.t_steps)
    throw ArgumentError("loss: schedule longer than the network's t range");
  for (int t : t_draws)
    if (t < 1 || t > sched.T())
      throw ArgumentError("loss: timestep " + std::to_string(t) +
                          " outside 1.." + std::to_string(sched.T()));

  // Forward-noise each row with its own timestep.
  Tensor<Real> x_t({B, F, Vp});
  for (std::int64_t i = 0; i < B; ++i) {
    const int t = t_draws[std::size_t(i)];
    const Real sa = Real(std::sqrt(sched.alpha_bar(t)));
    const Real se = Real(std::sqrt(1.0 - sched.alpha_bar(t)));
    for (std::int64_t j = 0; j < dim; ++j)
      x_t[i * dim + j] = sa * x0[i * dim + j] + se * eps_draws[i * dim + j];
  }

  std::vector<std::optional<double>> net_ages(std::size_t(B), std::nullopt);
  std::vector<int> net_t(std::size_t(B), 0);
  for (std::int64_t i = 0; i < B; ++i) {
    net_ages[std::size_t(i)] =
        cond_drop[std::size_t(i)] ? std::nullopt : ages[std::size_t(i)];
    net_t[std::size_t(i)] = t_draws[std::size_t(i)] - 1;
  }

  Tape<Real> tape;
  auto leaves = stage_params(tape, params, want_grads);
  auto fwd = denoiser_forward(tape, leaves, cfg, x_t, net_t, net_ages);

  // MSE term: batch mean of per-sample squared noise error.
  Id diff = tape.sub(fwd.eps, tape.leaf(eps_draws, false));
  Id mse_id = tape.mul_scalar(tape.sum_all(tape.mul(diff, diff)),
                              Real(1.0 / double(B)));

  // Variational term. The model mean comes from the detached eps prediction
  // (no gradient through it); per-element constants carry everything except
  // the learned log-variance interpolation.
  const Tensor<Real>& eps_hat = tape.value(fwd.eps);
  Tensor<Real> k1({B, F, Vp});       // additive constant per element
  Tensor<Real> cvar({B, F, Vp});     // coefficient of exp(-log sigma^2)
  Tensor<Real> log_lo({B, F, Vp});   // log beta_tilde (clipped), v = 0 end
  Tensor<Real> log_span({B, F, Vp});  // log beta - log beta_tilde (clipped)
  for (std::int64_t i = 0; i < B; ++i) {
    const int t = t_draws[std::size_t(i)];
    const double sa = std::sqrt(sched.alpha_bar(t));
    const double se = std::sqrt(1.0 - sched.alpha_bar(t));
    const double c0 = sched.mean_coef_x0(t), ct = sched.mean_coef_xt(t);
    const double lb = sched.log_beta(t);
    const double lbt = sched.log_beta_tilde_clipped(t);
    for (std::int64_t j = 0; j < dim; ++j) {
      const double xt = double(x_t[i * dim + j]);
      double x0_hat = (xt - se * double(eps_hat[i * dim + j])) / sa;
      x0_hat = std::clamp(x0_hat, -kX0Clip, kX0Clip);
      const double mu_theta = c0 * x0_hat + ct * xt;
      log_lo[i * dim + j] = Real(lbt);
      log_span[i * dim + j] = Real(lb - lbt);
      if (t == 1) {
        // Decoder: -log N(x0; mu_theta, sigma^2)
        //        = 0.5 (log 2pi + log sigma^2 + (x0-mu)^2 / sigma^2).
        const double d = double(x0[i * dim + j]) - mu_theta;
        k1[i * dim + j] = Real(std::log(2.0 * 3.14159265358979323846));
        cvar[i * dim + j] = Real(d * d);
      } else {
        // KL(q || p) = 0.5 (log sigma^2 - log bt - 1
        //                   + (bt + (mu_q - mu)^2) / sigma^2).
        const double bt = sched.beta_tilde(t);
        const double mu_q = c0 * double(x0[i * dim + j]) + ct * xt;
        const double d = mu_q - mu_theta;
        k1[i * dim + j] = Real(-std::log(bt) - 1.0);
        cvar[i * dim + j] = Real(bt + d * d);
      }
    }
  }
  // log sigma^2 = log_lo + v * log_span (v in (0,1) from the sigmoid head).
  Id logvar = tape.add(tape.mul(fwd.v, tape.leaf(log_span, false)),
                       tape.leaf(log_lo, false));
  Id inv_var = tape.exp_(tape.mul_scalar(logvar, Real(-1)));
  Id per_elem = tape.add(tape.add(logvar, tape.leaf(k1, false)),
                         tape.mul(inv_var, tape.leaf(cvar, false)));
  Id vlb_id = tape.mul_scalar(tape.sum_all(per_elem), Real(0.5 / double(B)));

  LossResult<Real> out;
  out.mse = double(tape.value(mse_id)[0]);
  out.vlb = double(tape.value(vlb_id)[0]);
  if (!std::isfinite(out.mse))
    throw NumericError("loss: mse term is non-finite");
  if (!std::isfinite(out.vlb))
    throw NumericError("loss: vlb term is non-finite");

  Id total = tape.add(mse_id, tape.mul_scalar(vlb_id, Real(lambda_vlb)));
  out.total = double(tape.value(total)[0]);
  if (want_grads) {
    tape.backward(total);
    out.grads.reserve(leaves.ids.size());
    for (auto id : leaves.ids) out.grads.push_back(tape.grad(id));
  }
  return out;
}

template <class Real>
LossResult<Real> diffusion_loss(
    const DenoiserParamsT<Real>& params, const DenoiserConfig& cfg,
    const Tensor<Real>& x0, const std::vector<std::optional<double>>& ages,
    const NoiseSchedule& sched, double lambda_vlb, double p_uncond,
    std::uint64_t seed, std::int64_t step, bool want_grads) {
  const std::int64_t B = x0.dim(0);
  auto t_draws = draw_timesteps(B, sched.T(), seed, step);
  auto eps = draw_noise<Real>(x0.shape(), seed, step);
  auto drop = draw_cond_drop(B, p_uncond, seed, step);
  return diffusion_loss(params, cfg, x0, ages, t_draws, eps, drop, sched,
                        lambda_vlb, want_grads);
}

template LossResult<float> diffusion_loss(
    const DenoiserParamsT<float>&, const DenoiserConfig&, const Tensor<float>&,
    const std::vector<std::optional<double>>&, const std::vector<int>&,
    const Tensor<float>&, const std::vector<std::uint8_t>&,
    const NoiseSchedule&, double, bool);
template LossResult<double> diffusion_loss(
    const DenoiserParamsT<double>&, const DenoiserConfig&,
    const Tensor<double>&, const std::vector<std::optional<double>>&,
    const std::vector<int>&, const Tensor<double>&,
    const std::vector<std::uint8_t>&, const NoiseSchedule&, double, bool);
template LossResult<float> diffusion_loss(
    const DenoiserParamsT<float>&, const DenoiserConfig&, const Tensor<float>&,
    const std::vector<std::optional<double>>&, const NoiseSchedule&, double,
    double, std::uint64_t, std::int64_t, bool);
template LossResult<double> diffusion_loss(
    const DenoiserParamsT<double>&, const DenoiserConfig&,
    const Tensor<double>&, const std::vector<std::optional<double>>&,
    const NoiseSchedule&, double, double, std::uint64_t, std::int64_t, bool);
template Tensor<float> draw_noise(Shape, std::uint64_t, std::int64_t);
template Tensor<double> draw_noise(Shape, std::uint64_t, std::int64_t);

}  // namespace icodiff
