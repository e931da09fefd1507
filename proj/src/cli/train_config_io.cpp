// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/cli/train_config_io.hpp"

#include "icodiff/errors.hpp"

namespace icodiff {

TomlTable train_config_to_toml(const TrainConfig& cfg) {
  TomlTable t;
  t["lr"] = TomlValue::of(cfg.lr);
  t["weight_decay"] = TomlValue::of(cfg.weight_decay);
  t["batch_size"] = TomlValue::of(std::int64_t(cfg.batch_size));
  t["steps"] = TomlValue::of(cfg.steps);
  t["ema_decay"] = TomlValue::of(cfg.ema_decay);
  t["p_uncond"] = TomlValue::of(cfg.p_uncond);
  t["lambda_vlb"] = TomlValue::of(cfg.lambda_vlb);
  t["seed"] = TomlValue::of(std::int64_t(cfg.seed));
  t["t_steps"] = TomlValue::of(std::int64_t(cfg.t_steps));
  t["beta_min"] = TomlValue::of(cfg.beta_min);
  t["beta_max"] = TomlValue::of(cfg.beta_max);
  t["low_level"] = TomlValue::of(std::int64_t(cfg.low_level));
  t["manifest"] = TomlValue::of(cfg.manifest_path);
  t["out_dir"] = TomlValue::of(cfg.out_dir);
  t["checkpoint_every"] = TomlValue::of(std::int64_t(cfg.checkpoint_every));
  t["metrics_every"] = TomlValue::of(std::int64_t(cfg.metrics_every));
  t["model.layers"] = TomlValue::of(std::int64_t(cfg.model.layers));
  t["model.heads"] = TomlValue::of(std::int64_t(cfg.model.heads));
  t["model.hidden"] = TomlValue::of(std::int64_t(cfg.model.hidden));
  t["model.mlp"] = TomlValue::of(std::int64_t(cfg.model.mlp));
  t["model.mode"] = TomlValue::of(to_string(cfg.model.mode));
  t["model.age_min"] = TomlValue::of(cfg.model.age_min);
  t["model.age_max"] = TomlValue::of(cfg.model.age_max);
  return t;
}

TrainConfig train_config_from_toml(const TomlTable& table,
                                   const TrainConfig& base) {
  TrainConfig cfg = base;
  for (const auto& [key, v] : table) {
    if (key == "lr") cfg.lr = v.as_float(key);
    else if (key == "weight_decay") cfg.weight_decay = v.as_float(key);
    else if (key == "batch_size") cfg.batch_size = int(v.as_int(key));
    else if (key == "steps") cfg.steps = v.as_int(key);
    else if (key == "ema_decay") cfg.ema_decay = v.as_float(key);
    else if (key == "p_uncond") cfg.p_uncond = v.as_float(key);
    else if (key == "lambda_vlb") cfg.lambda_vlb = v.as_float(key);
    else if (key == "seed") cfg.seed = std::uint64_t(v.as_int(key));
    else if (key == "t_steps") cfg.t_steps = int(v.as_int(key));
    else if (key == "beta_min") cfg.beta_min = v.as_float(key);
    else if (key == "beta_max") cfg.beta_max = v.as_float(key);
    else if (key == "low_level") cfg.low_level = int(v.as_int(key));
    else if (key == "manifest") cfg.manifest_path = v.as_string(key);
    else if (key == "out_dir") cfg.out_dir = v.as_string(key);
    else if (key == "checkpoint_every") cfg.checkpoint_every = int(v.as_int(key));
    else if (key == "metrics_every") cfg.metrics_every = int(v.as_int(key));
    else if (key == "model.layers") cfg.model.layers = int(v.as_int(key));
    else if (key == "model.heads") cfg.model.heads = int(v.as_int(key));
    else if (key == "model.hidden") cfg.model.hidden = int(v.as_int(key));
    else if (key == "model.mlp") cfg.model.mlp = int(v.as_int(key));
    else if (key == "model.mode")
      cfg.model.mode = conditioning_mode_from_string(v.as_string(key));
    else if (key == "model.age_min") cfg.model.age_min = v.as_float(key);
    else if (key == "model.age_max") cfg.model.age_max = v.as_float(key);
    else
      throw ParseError("unknown config key '" + key + "'");
  }
  return cfg;
}

}  // namespace icodiff
