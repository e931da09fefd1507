// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/train/optimizer.hpp"

#include <cmath>

#include "icodiff/errors.hpp"

namespace icodiff {

template <class Real>
void adamw_step(Tensor<Real>& param, const Tensor<Real>& grad, Tensor<Real>& m,
                Tensor<Real>& v, std::int64_t step, const AdamConfig& cfg) {
  if (!param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v))
    throw ArgumentError("adamw: parameter/gradient/moment shapes differ");
  if (step < 1) throw ArgumentError("adamw: step must be >= 1");
  if (!(cfg.lr > 0.0)) throw ArgumentError("adamw: lr must be positive");
  for (std::int64_t i = 0; i < grad.numel(); ++i)
    if (!std::isfinite(double(grad[i])))
      throw NumericError("adamw: non-finite gradient");

  const double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(step));
  for (std::int64_t i = 0; i < param.numel(); ++i) {
    const double g = double(grad[i]);
    double p = double(param[i]) * (1.0 - cfg.lr * cfg.weight_decay);
    const double mi = cfg.beta1 * double(m[i]) + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * double(v[i]) + (1.0 - cfg.beta2) * g * g;
    m[i] = Real(mi);
    v[i] = Real(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    p -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    param[i] = Real(p);
  }
}

template <class Real>
void adamw_step(const std::vector<Tensor<Real>*>& params,
                const std::vector<Tensor<Real>>& grads,
                std::vector<Tensor<Real>>& m, std::vector<Tensor<Real>>& v,
                std::int64_t step, const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != m.size() ||
      params.size() != v.size())
    throw ArgumentError("adamw: parameter list lengths differ");
  for (std::size_t i = 0; i < params.size(); ++i)
    adamw_step(*params[i], grads[i], m[i], v[i], step, cfg);
}

template <class Real>
void ema_update(Tensor<Real>& ema, const Tensor<Real>& param, double decay) {
  if (!ema.same_shape(param))
    throw ArgumentError("ema: shape mismatch");
  if (decay < 0.0 || decay > 1.0)
    throw ArgumentError("ema: decay must be in [0, 1]");
  for (std::int64_t i = 0; i < ema.numel(); ++i)
    ema[i] = Real(decay * double(ema[i]) + (1.0 - decay) * double(param[i]));
}

template <class Real>
void ema_update(const std::vector<Tensor<Real>*>& ema,
                const std::vector<const Tensor<Real>*>& params, double decay) {
  if (ema.size() != params.size())
    throw ArgumentError("ema: parameter list lengths differ");
  for (std::size_t i = 0; i < ema.size(); ++i)
    ema_update(*ema[i], *params[i], decay);
}

template void adamw_step(Tensor<float>&, const Tensor<float>&, Tensor<float>&,
                         Tensor<float>&, std::int64_t, const AdamConfig&);
template void adamw_step(Tensor<double>&, const Tensor<double>&,
                         Tensor<double>&, Tensor<double>&, std::int64_t,
                         const AdamConfig&);
template void adamw_step(const std::vector<Tensor<float>*>&,
                         const std::vector<Tensor<float>>&,
                         std::vector<Tensor<float>>&,
                         std::vector<Tensor<float>>&, std::int64_t,
                         const AdamConfig&);
template void adamw_step(const std::vector<Tensor<double>*>&,
                         const std::vector<Tensor<double>>&,
                         std::vector<Tensor<double>>&,
                         std::vector<Tensor<double>>&, std::int64_t,
                         const AdamConfig&);
template void ema_update(Tensor<float>&, const Tensor<float>&, double);
template void ema_update(Tensor<double>&, const Tensor<double>&, double);
template void ema_update(const std::vector<Tensor<float>*>&,
                         const std::vector<const Tensor<float>*>&, double);
template void ema_update(const std::vector<Tensor<double>*>&,
                         const std::vector<const Tensor<double>*>&, double);

}  // namespace icodiff
