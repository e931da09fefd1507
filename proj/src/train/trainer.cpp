// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/train/trainer.hpp"

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "icodiff/dataio/manifest.hpp"
#include "icodiff/dataio/normalize.hpp"
#include "icodiff/dataio/smf.hpp"
#include "icodiff/diffusion/loss.hpp"
#include "icodiff/geom/patch_table.hpp"
#include "icodiff/rng.hpp"
#include "icodiff/train/optimizer.hpp"

namespace icodiff {

void validate_train_config(const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ArgumentError("train: lr must be positive");
  if (cfg.weight_decay < 0.0)
    throw ArgumentError("train: weight decay must be >= 0");
  if (cfg.batch_size < 1) throw ArgumentError("train: batch size must be >= 1");
  if (cfg.steps < 1) throw ArgumentError("train: steps must be >= 1");
  if (cfg.ema_decay < 0.0 || cfg.ema_decay >= 1.0)
    throw ArgumentError("train: EMA decay must be in [0, 1)");
  if (cfg.p_uncond < 0.0 || cfg.p_uncond > 1.0)
    throw ArgumentError("train: p_uncond must be in [0, 1]");
  if (cfg.lambda_vlb < 0.0)
    throw ArgumentError("train: lambda_vlb must be >= 0");
  if (cfg.manifest_path.empty() || cfg.out_dir.empty())
    throw ArgumentError("train: manifest path and out dir are required");
  if (cfg.checkpoint_every < 1 || cfg.metrics_every < 1)
    throw ArgumentError("train: cadences must be >= 1");
}

namespace {

struct TrainData {
  PatchTable table;
  TensorF pool;  // (N, F, V_p) normalized patchified training maps
  std::vector<double> ages;
  double norm_mean = 0.0, norm_std = 1.0;
  int level = 0;
};

TrainData load_training_data(const TrainConfig& cfg,
                             std::optional<double> norm_mean,
                             std::optional<double> norm_std) {
  const DatasetManifest manifest = load_manifest(cfg.manifest_path);
  const auto train_split = split_entries(manifest, "train");
  if (train_split.empty())
    throw StateError("train: manifest has no train-split entries");
  const std::string base =
      std::filesystem::path(cfg.manifest_path).parent_path().string();

  std::vector<MetricMap> maps;
  maps.reserve(train_split.size());
  for (const auto* e : train_split) {
    MetricMap m = read_smf(base.empty() ? e->path : base + "/" + e->path);
    if (m.level != manifest.level)
      throw StateError("train: level mismatch in " + e->path);
    m.age_weeks = e->age_weeks;
    maps.push_back(std::move(m));
  }

  TrainData data;
  data.level = manifest.level;
  if (norm_mean && norm_std) {
    data.norm_mean = *norm_mean;
    data.norm_std = *norm_std;
  } else if (manifest.norm_mean && manifest.norm_std) {
    data.norm_mean = *manifest.norm_mean;
    data.norm_std = *manifest.norm_std;
  } else {
    std::tie(data.norm_mean, data.norm_std) = compute_norm_stats(maps);
  }
  if (!(data.norm_std > 0.0))
    throw StateError("train: degenerate normalization (zero variance)");

  data.table = load_or_build_patch_table(manifest.level, cfg.low_level,
                                         cfg.out_dir);
  const std::int64_t N = std::int64_t(maps.size());
  const std::int64_t F = std::int64_t(data.table.patches.size());
  const std::int64_t Vp = data.table.patch_len;
  data.pool = TensorF({N, F, Vp});
  data.ages.reserve(maps.size());
  for (std::int64_t i = 0; i < N; ++i) {
    const MetricMap normed =
        normalize(maps[std::size_t(i)], data.norm_mean, data.norm_std);
    const TensorF patches = patchify(normed, data.table);
    std::memcpy(data.pool.data() + i * F * Vp, patches.data(),
                sizeof(float) * std::size_t(F * Vp));
    data.ages.push_back(*maps[std::size_t(i)].age_weeks);
  }
  return data;
}

TrainResult run_loop(const TrainConfig& cfg, TrainState st,
                     const TrainData& data,
                     const std::function<void(std::int64_t, std::int64_t)>&
                         progress) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string ckpt_path = cfg.out_dir + "/checkpoint.bin";
  const std::string metrics_path = cfg.out_dir + "/metrics.jsonl";

  std::ofstream metrics(metrics_path,
                        st.step > 0 ? std::ios::app : std::ios::trunc);
  if (!metrics) throw IoError("train: cannot open " + metrics_path);

  std::vector<TensorF*> param_ptrs, ema_ptrs;
  std::vector<const TensorF*> param_cptrs;
  st.params.for_each(
      [&](const std::string&, TensorF& t) { param_ptrs.push_back(&t); });
  st.ema.for_each(
      [&](const std::string&, TensorF& t) { ema_ptrs.push_back(&t); });
  for (auto* p : param_ptrs) param_cptrs.push_back(p);

  AdamConfig adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.weight_decay;

  const std::int64_t N = data.pool.dim(0);
  const std::int64_t F = data.pool.dim(1), Vp = data.pool.dim(2);
  const std::int64_t B = cfg.batch_size;
  const auto t0 = std::chrono::steady_clock::now();

  Tensor<float> x0({B, F, Vp});
  std::vector<std::optional<double>> batch_ages(std::size_t(B), std::nullopt);
  for (std::int64_t step = st.step + 1; step <= cfg.steps; ++step) {
    RngStream batch_rng(st.seed, "batch", std::uint64_t(step));
    for (std::int64_t b = 0; b < B; ++b) {
      const auto pick = std::int64_t(batch_rng.uniform_int(0, N - 1));
      std::memcpy(x0.data() + b * F * Vp, data.pool.data() + pick * F * Vp,
                  sizeof(float) * std::size_t(F * Vp));
      batch_ages[std::size_t(b)] = data.ages[std::size_t(pick)];
    }

    // A non-finite loss aborts here; the previous checkpoint stays intact.
    const LossResult<float> res =
        diffusion_loss(st.params, st.config, x0, batch_ages, st.schedule,
                       cfg.lambda_vlb, cfg.p_uncond, st.seed, step, true);

    adamw_step(param_ptrs, res.grads, st.adam_m, st.adam_v, step, adam);
    ema_update(ema_ptrs, param_cptrs, cfg.ema_decay);
    st.step = step;

    if (step % cfg.metrics_every == 0 || step == cfg.steps) {
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      nlohmann::json rec = {{"step", step},
                            {"loss_mse", res.mse},
                            {"loss_vlb", res.vlb},
                            {"lr", cfg.lr},
                            {"wall_ms", ms}};
      metrics << rec.dump() << "\n";
      metrics.flush();
      if (!metrics) throw IoError("train: failed writing metrics");
    }
    if (step % cfg.checkpoint_every == 0 || step == cfg.steps)
      save_checkpoint(st, ckpt_path);
    if (progress) progress(step, cfg.steps);
  }
  return {std::move(st), ckpt_path, metrics_path};
}

}  // namespace

TrainResult train(const TrainConfig& cfg,
                  const std::function<void(std::int64_t, std::int64_t)>&
                      progress) {
  validate_train_config(cfg);
  TrainData data = load_training_data(cfg, std::nullopt, std::nullopt);

  DenoiserConfig model = cfg.model;
  model.patch_count = std::int64_t(data.table.patches.size());
  model.patch_len = data.table.patch_len;
  model.t_steps = cfg.t_steps;
  validate_config(model);

  TrainState st = init_train_state(
      model, make_schedule(cfg.t_steps, cfg.beta_min, cfg.beta_max), cfg.seed);
  st.norm_mean = data.norm_mean;
  st.norm_std = data.norm_std;
  return run_loop(cfg, std::move(st), data, progress);
}

TrainResult train(const TrainConfig& cfg, TrainState state,
                  const std::function<void(std::int64_t, std::int64_t)>&
                      progress) {
  validate_train_config(cfg);
  if (state.step >= cfg.steps)
    throw ArgumentError("train: checkpoint already at or past target steps");
  TrainData data =
      load_training_data(cfg, state.norm_mean, state.norm_std);
  if (std::int64_t(data.table.patches.size()) != state.config.patch_count ||
      data.table.patch_len != state.config.patch_len)
    throw StateError("train: checkpoint patch layout does not match data");
  state.norm_mean = data.norm_mean;
  state.norm_std = data.norm_std;
  return run_loop(cfg, std::move(state), data, progress);
}

}  // namespace icodiff
