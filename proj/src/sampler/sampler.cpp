// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/sampler/sampler.hpp"

#include <cmath>
#include <cstring>

#include "icodiff/rng.hpp"

namespace icodiff {

template <class Real>
Tensor<Real> guided_eps(const Tensor<Real>& eps_cond,
                        const Tensor<Real>& eps_uncond, double w) {
  if (!eps_cond.same_shape(eps_uncond))
    throw ArgumentError("guided_eps: branch shapes differ: " +
                        shape_str(eps_cond.shape()) + " vs " +
                        shape_str(eps_uncond.shape()));
  Tensor<Real> out(eps_cond.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i)
    out[i] = eps_uncond[i] + Real(w) * (eps_cond[i] - eps_uncond[i]);
  return out;
}

template <class Real>
Tensor<Real> ancestral_chain(std::int64_t count, const Shape& sample_shape,
                             const DenoiseFn<Real>& fn,
                             const NoiseSchedule& sched, std::uint64_t seed,
                             const std::function<void(int, int)>& progress) {
  if (count < 1) throw ArgumentError("sampler: count must be >= 1");
  if (sched.T() < 1) throw ArgumentError("sampler: empty schedule");
  const std::int64_t dim = shape_numel(sample_shape);

  std::vector<RngStream> streams;
  streams.reserve(std::size_t(count));
  for (std::int64_t i = 0; i < count; ++i)
    streams.emplace_back(seed, "chain", std::uint64_t(i));

  Shape full;
  full.push_back(count);
  for (auto d : sample_shape) full.push_back(d);
  Tensor<Real> x(full);
  for (std::int64_t i = 0; i < count; ++i)
    for (std::int64_t j = 0; j < dim; ++j)
      x[i * dim + j] = Real(streams[std::size_t(i)].normal());

  Tensor<Real> eps(full), v(full), z(full);
  for (int t = sched.T(); t >= 1; --t) {
    fn(x, t, eps, v);
    if (!x.same_shape(eps) || !x.same_shape(v))
      throw ArgumentError("sampler: denoiser output shape mismatch");
    if (t > 1) {
      for (std::int64_t i = 0; i < count; ++i)
        for (std::int64_t j = 0; j < dim; ++j)
          z[i * dim + j] = Real(streams[std::size_t(i)].normal());
    } else {
      std::fill(z.vec().begin(), z.vec().end(), Real(0));
    }
    x = reverse_step(x, t, eps, v, z, sched);
    if (progress) progress(sched.T() - t + 1, sched.T());
  }
  return x;
}

template <class Real>
DenoiseFn<Real> make_guided_denoiser(const DenoiserParamsT<Real>& params,
                                     const DenoiserConfig& cfg,
                                     std::optional<double> age, double w,
                                     SamplerStats* stats) {
  validate_config(cfg);
  const bool two_branch = age.has_value() && w != 1.0;
  return [&params, cfg, age, w, stats, two_branch](
             const Tensor<Real>& x, int t, Tensor<Real>& eps_out,
             Tensor<Real>& v_out) {
    if (x.rank() != 3 || x.dim(1) != cfg.patch_count ||
        x.dim(2) != cfg.patch_len)
      throw ArgumentError("sampler: state shape " + shape_str(x.shape()) +
                          " does not match the network patch layout");
    const std::int64_t B = x.dim(0);
    const std::int64_t per = x.dim(1) * x.dim(2);
    const int net_t = t - 1;

    if (!two_branch) {
      // One branch: conditional when age present with w == 1, else null.
      std::vector<int> ts(std::size_t(B), net_t);
      std::vector<std::optional<double>> ages(std::size_t(B), age);
      auto out = denoiser_infer(params, cfg, x, ts, ages);
      eps_out = std::move(out.eps_pred);
      v_out = std::move(out.v_pred);
      if (stats) {
        stats->denoiser_calls += 1;
        stats->denoiser_rows += B;
      }
      return;
    }

    // Conditional rows then null rows, one doubled call.
    Tensor<Real> both({2 * B, x.dim(1), x.dim(2)});
    std::memcpy(both.data(), x.data(), sizeof(Real) * std::size_t(B * per));
    std::memcpy(both.data() + B * per, x.data(),
                sizeof(Real) * std::size_t(B * per));
    std::vector<int> ts(std::size_t(2 * B), net_t);
    std::vector<std::optional<double>> ages(std::size_t(2 * B), std::nullopt);
    for (std::int64_t i = 0; i < B; ++i) ages[std::size_t(i)] = age;
    auto out = denoiser_infer(params, cfg, both, ts, ages);
    if (stats) {
      stats->denoiser_calls += 1;
      stats->denoiser_rows += 2 * B;
    }
    eps_out = Tensor<Real>(x.shape());
    v_out = Tensor<Real>(x.shape());
    for (std::int64_t i = 0; i < B * per; ++i) {
      const Real c = out.eps_pred[i];
      const Real u = out.eps_pred[B * per + i];
      eps_out[i] = u + Real(w) * (c - u);
      v_out[i] = out.v_pred[i];  // variance from the conditional branch
    }
  };
}

SampleOutput sample(const DenoiserParams& params, const DenoiserConfig& cfg,
                    const NoiseSchedule& sched, const PatchTable& table,
                    const SampleRequest& req, std::optional<double> norm_mean,
                    std::optional<double> norm_std,
                    const std::function<void(int, int)>& progress) {
  validate_config(cfg);
  if (req.count < 1) throw ArgumentError("sample: count must be >= 1");
  if (req.level != table.high_level)
    throw ArgumentError("sample: requested level " + std::to_string(req.level) +
                        " but the patch table covers level " +
                        std::to_string(table.high_level));
  if (table.patch_len != cfg.patch_len ||
      std::int64_t(table.patches.size()) != cfg.patch_count)
    throw ArgumentError("sample: patch table does not match network config");
  if (req.age_weeks &&
      (*req.age_weeks < cfg.age_min || *req.age_weeks > cfg.age_max))
    throw ArgumentError("sample: age outside the trained range");
  if (!norm_mean || !norm_std)
    throw StateError("sample: normalization constants missing from state");

  SampleOutput out;
  auto fn = make_guided_denoiser<float>(params, cfg, req.age_weeks,
                                        req.guidance, &out.stats);
  Shape per_sample = {cfg.patch_count, cfg.patch_len};
  TensorF x = ancestral_chain<float>(req.count, per_sample, fn, sched,
                                     req.seed, progress);

  const std::int64_t per = cfg.patch_count * cfg.patch_len;
  out.maps.reserve(std::size_t(req.count));
  for (int i = 0; i < req.count; ++i) {
    TensorF one({cfg.patch_count, cfg.patch_len});
    std::memcpy(one.data(), x.data() + std::int64_t(i) * per,
                sizeof(float) * std::size_t(per));
    MetricMap m = unpatchify(one, table);
    for (auto& v : m.values)
      v = float(double(v) * *norm_std + *norm_mean);
    m.age_weeks = req.age_weeks;
    m.norm_mean.reset();
    m.norm_std.reset();
    out.maps.push_back(std::move(m));
  }
  return out;
}

template Tensor<float> guided_eps(const Tensor<float>&, const Tensor<float>&,
                                  double);
template Tensor<double> guided_eps(const Tensor<double>&,
                                   const Tensor<double>&, double);
template Tensor<float> ancestral_chain(std::int64_t, const Shape&,
                                       const DenoiseFn<float>&,
                                       const NoiseSchedule&, std::uint64_t,
                                       const std::function<void(int, int)>&);
template Tensor<double> ancestral_chain(std::int64_t, const Shape&,
                                        const DenoiseFn<double>&,
                                        const NoiseSchedule&, std::uint64_t,
                                        const std::function<void(int, int)>&);
template DenoiseFn<float> make_guided_denoiser(const DenoiserParamsT<float>&,
                                               const DenoiserConfig&,
                                               std::optional<double>, double,
                                               SamplerStats*);
template DenoiseFn<double> make_guided_denoiser(const DenoiserParamsT<double>&,
                                                const DenoiserConfig&,
                                                std::optional<double>, double,
                                                SamplerStats*);

}  // namespace icodiff
