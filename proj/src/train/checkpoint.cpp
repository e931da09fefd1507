// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/train/checkpoint.hpp"

#include <bit>

#include <json.hpp>

#include "icodiff/dataio/container.hpp"

namespace icodiff {

namespace {

constexpr std::int64_t kCheckpointFormat = 1;

nlohmann::json config_json(const DenoiserConfig& c) {
  return {{"layers", c.layers},        {"heads", c.heads},
          {"hidden", c.hidden},        {"mlp", c.mlp},
          {"patch_count", c.patch_count}, {"patch_len", c.patch_len},
          {"mode", to_string(c.mode)}, {"age_min", c.age_min},
          {"age_max", c.age_max},      {"t_steps", c.t_steps}};
}

DenoiserConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    DenoiserConfig c;
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.mlp = j.at("mlp").get<int>();
    c.patch_count = j.at("patch_count").get<std::int64_t>();
    c.patch_len = j.at("patch_len").get<std::int64_t>();
    c.mode = conditioning_mode_from_string(j.at("mode").get<std::string>());
    c.age_min = j.at("age_min").get<double>();
    c.age_max = j.at("age_max").get<double>();
    c.t_steps = j.at("t_steps").get<int>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: bad embedded config: ") +
                     e.what());
  }
}

}  // namespace

TrainState init_train_state(const DenoiserConfig& cfg,
                            const NoiseSchedule& sched, std::uint64_t seed) {
  TrainState st;
  st.config = cfg;
  st.schedule = sched;
  st.params = init_denoiser_params<float>(cfg, seed);
  st.ema = st.params;
  st.params.for_each([&](const std::string&, const TensorF& t) {
    st.adam_m.emplace_back(t.shape());
    st.adam_v.emplace_back(t.shape());
  });
  st.step = 0;
  st.seed = seed;
  return st;
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  Container c;
  c.put_i64("format", {kCheckpointFormat});
  c.put_string("config", config_json(state.config).dump());
  c.put_f64("schedule.betas",
            TensorD({std::int64_t(state.schedule.betas().size())},
                    state.schedule.betas()));
  c.put_i64("state", {state.step, std::bit_cast<std::int64_t>(state.seed)});
  if (state.norm_mean && state.norm_std)
    c.put_f64("norm", TensorD({2}, {*state.norm_mean, *state.norm_std}));

  std::size_t index = 0;
  state.params.for_each([&](const std::string& name, const TensorF& t) {
    c.put_f32("param/" + name, t);
    c.put_f32("adam_m/" + name, state.adam_m.at(index));
    c.put_f32("adam_v/" + name, state.adam_v.at(index));
    ++index;
  });
  state.ema.for_each([&](const std::string& name, const TensorF& t) {
    c.put_f32("ema/" + name, t);
  });
  c.save(path);
}

TrainState load_checkpoint(const std::string& path) {
  Container c = Container::load(path);
  const auto format = c.i64("format");
  if (format.size() != 1 || format[0] != kCheckpointFormat)
    throw ParseError("checkpoint: unsupported format in " + path);

  TrainState st;
  st.config = config_from_json(c.string("config"));
  validate_config(st.config);
  const TensorD betas = c.f64("schedule.betas");
  st.schedule = NoiseSchedule(int(betas.numel()), betas.vec());
  const auto meta = c.i64("state");
  if (meta.size() != 2) throw ParseError("checkpoint: bad state entry");
  st.step = meta[0];
  st.seed = std::bit_cast<std::uint64_t>(meta[1]);
  if (c.has("norm")) {
    const TensorD norm = c.f64("norm");
    if (norm.numel() != 2) throw ParseError("checkpoint: bad norm entry");
    st.norm_mean = norm[0];
    st.norm_std = norm[1];
  }

  // Allocate by config, then fill every tensor by name.
  st.params = init_denoiser_params<float>(st.config, 0);
  st.ema = st.params;
  st.params.for_each([&](const std::string& name, TensorF& t) {
    TensorF loaded = c.f32("param/" + name);
    if (!loaded.same_shape(t))
      throw ParseError("checkpoint: shape mismatch for " + name);
    t = std::move(loaded);
    st.adam_m.push_back(c.f32("adam_m/" + name));
    st.adam_v.push_back(c.f32("adam_v/" + name));
    if (!st.adam_m.back().same_shape(t) || !st.adam_v.back().same_shape(t))
      throw ParseError("checkpoint: moment shape mismatch for " + name);
  });
  st.ema.for_each([&](const std::string& name, TensorF& t) {
    TensorF loaded = c.f32("ema/" + name);
    if (!loaded.same_shape(t))
      throw ParseError("checkpoint: EMA shape mismatch for " + name);
    t = std::move(loaded);
  });
  return st;
}

}  // namespace icodiff
