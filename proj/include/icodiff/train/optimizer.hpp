// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "icodiff/core/tensor.hpp"

namespace icodiff {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// One AdamW update on a single tensor. Decoupled weight decay shrinks the
// parameter before the bias-corrected adaptive step. `step` is 1-based.
template <class Real>
void adamw_step(Tensor<Real>& param, const Tensor<Real>& grad,
                Tensor<Real>& m, Tensor<Real>& v, std::int64_t step,
                const AdamConfig& cfg);

// The same update across a parameter list (canonical order).
template <class Real>
void adamw_step(const std::vector<Tensor<Real>*>& params,
                const std::vector<Tensor<Real>>& grads,
                std::vector<Tensor<Real>>& m, std::vector<Tensor<Real>>& v,
                std::int64_t step, const AdamConfig& cfg);

// ema' = decay * ema + (1 - decay) * params, elementwise.
template <class Real>
void ema_update(Tensor<Real>& ema, const Tensor<Real>& param, double decay);
template <class Real>
void ema_update(const std::vector<Tensor<Real>*>& ema,
                const std::vector<const Tensor<Real>*>& params, double decay);

}  // namespace icodiff
