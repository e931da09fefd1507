// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icodiff/core/tape.hpp"

namespace icodiff {

// How the (t, age) conditioning enters the transformer: either as two extra
// tokens prepended to the patch sequence, or as zero-initialized per-block
// modulation of layernorm shift/scale and residual gates.
enum class ConditioningMode { kTokenAppend, kAdaLnZero };

struct DenoiserConfig {
  int layers = 12;
  int heads = 6;
  int hidden = 384;
  int mlp = 768;
  std::int64_t patch_count = 320;  // F_low
  std::int64_t patch_len = 153;    // V_p
  ConditioningMode mode = ConditioningMode::kTokenAppend;
  double age_min = 24.0;
  double age_max = 45.0;
  int t_steps = 1000;  // valid network timestep indices are 0..t_steps-1
};

void validate_config(const DenoiserConfig& cfg);

std::string to_string(ConditioningMode mode);
ConditioningMode conditioning_mode_from_string(const std::string& s);

template <class Real>
struct BlockParamsT {
  Tensor<Real> qkv_w, qkv_b;    // (D, 3D), (3D)
  Tensor<Real> out_w, out_b;    // (D, D), (D)
  Tensor<Real> ln1_g, ln1_b;    // (D), (D)
  Tensor<Real> ln2_g, ln2_b;    // (D), (D)
  Tensor<Real> ffn_w1, ffn_b1;  // (D, M), (M)
  Tensor<Real> ffn_w2, ffn_b2;  // (M, D), (D)
  Tensor<Real> mod_w, mod_b;    // (D, 6D), (6D); adaln-zero mode only
};

// All learnable tensors. The decoder (and, in adaln-zero mode, every
// modulation projection) starts at exactly zero, which pins the untrained
// network to eps = 0, v = 0.5. The age pathway is anchored at the learned
// null vector: embed(age) = null_cond + age_mlp(features), with the final
// age-MLP layer zero-initialized, so a model never trained on ages keeps
// embed(age) identical to embed(NULL).
template <class Real>
struct DenoiserParamsT {
  Tensor<Real> patch_embed_w, patch_embed_b;  // (V_p, D), (D)
  Tensor<Real> pos_embed;                     // (F, D)
  Tensor<Real> t_w1, t_b1, t_w2, t_b2;        // timestep MLP
  Tensor<Real> a_w1, a_b1, a_w2, a_b2;        // age MLP (w2, b2 zero-init)
  Tensor<Real> null_cond;                     // (D)
  std::vector<BlockParamsT<Real>> blocks;
  Tensor<Real> final_ln_g, final_ln_b;        // (D), (D)
  Tensor<Real> final_mod_w, final_mod_b;      // (D, 2D), (2D); adaln-zero only
  Tensor<Real> decoder_w, decoder_b;          // (D, 2V_p), (2V_p); zero-init

  // Visits every present tensor in a fixed canonical order with a stable
  // name; the order defines optimizer-state and checkpoint layout.
  template <class F>
  void for_each(F&& f) {
    f("patch_embed.w", patch_embed_w);
    f("patch_embed.b", patch_embed_b);
    f("pos_embed", pos_embed);
    f("t_mlp.w1", t_w1);
    f("t_mlp.b1", t_b1);
    f("t_mlp.w2", t_w2);
    f("t_mlp.b2", t_b2);
    f("a_mlp.w1", a_w1);
    f("a_mlp.b1", a_b1);
    f("a_mlp.w2", a_w2);
    f("a_mlp.b2", a_b2);
    f("null_cond", null_cond);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::string p = "block" + std::to_string(i) + ".";
      auto& b = blocks[i];
      f(p + "qkv.w", b.qkv_w);
      f(p + "qkv.b", b.qkv_b);
      f(p + "out.w", b.out_w);
      f(p + "out.b", b.out_b);
      f(p + "ln1.g", b.ln1_g);
      f(p + "ln1.b", b.ln1_b);
      f(p + "ln2.g", b.ln2_g);
      f(p + "ln2.b", b.ln2_b);
      f(p + "ffn.w1", b.ffn_w1);
      f(p + "ffn.b1", b.ffn_b1);
      f(p + "ffn.w2", b.ffn_w2);
      f(p + "ffn.b2", b.ffn_b2);
      if (b.mod_w.numel() != 0) {
        f(p + "mod.w", b.mod_w);
        f(p + "mod.b", b.mod_b);
      }
    }
    f("final_ln.g", final_ln_g);
    f("final_ln.b", final_ln_b);
    if (final_mod_w.numel() != 0) {
      f("final_mod.w", final_mod_w);
      f("final_mod.b", final_mod_b);
    }
    f("decoder.w", decoder_w);
    f("decoder.b", decoder_b);
  }

  template <class F>
  void for_each(F&& f) const {
    const_cast<DenoiserParamsT*>(this)->for_each(
        [&f](const std::string& name, Tensor<Real>& t) {
          f(name, static_cast<const Tensor<Real>&>(t));
        });
  }

  template <class Other>
  DenoiserParamsT<Other> cast() const {
    DenoiserParamsT<Other> out;
    out.blocks.resize(blocks.size());
    auto copy = [](const Tensor<Real>& s) { return s.template cast<Other>(); };
    out.patch_embed_w = copy(patch_embed_w);
    out.patch_embed_b = copy(patch_embed_b);
    out.pos_embed = copy(pos_embed);
    out.t_w1 = copy(t_w1); out.t_b1 = copy(t_b1);
    out.t_w2 = copy(t_w2); out.t_b2 = copy(t_b2);
    out.a_w1 = copy(a_w1); out.a_b1 = copy(a_b1);
    out.a_w2 = copy(a_w2); out.a_b2 = copy(a_b2);
    out.null_cond = copy(null_cond);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      auto& o = out.blocks[i];
      o.qkv_w = copy(b.qkv_w); o.qkv_b = copy(b.qkv_b);
      o.out_w = copy(b.out_w); o.out_b = copy(b.out_b);
      o.ln1_g = copy(b.ln1_g); o.ln1_b = copy(b.ln1_b);
      o.ln2_g = copy(b.ln2_g); o.ln2_b = copy(b.ln2_b);
      o.ffn_w1 = copy(b.ffn_w1); o.ffn_b1 = copy(b.ffn_b1);
      o.ffn_w2 = copy(b.ffn_w2); o.ffn_b2 = copy(b.ffn_b2);
      if (b.mod_w.numel() != 0) { o.mod_w = copy(b.mod_w); o.mod_b = copy(b.mod_b); }
    }
    out.final_ln_g = copy(final_ln_g);
    out.final_ln_b = copy(final_ln_b);
    if (final_mod_w.numel() != 0) {
      out.final_mod_w = copy(final_mod_w);
      out.final_mod_b = copy(final_mod_b);
    }
    out.decoder_w = copy(decoder_w);
    out.decoder_b = copy(decoder_b);
    return out;
  }
};

using DenoiserParams = DenoiserParamsT<float>;

// Fresh parameters: projections ~ N(0, 0.02^2), biases zero, positional
// embedding ~ N(0, 0.02^2), decoder and modulation projections exactly zero.
template <class Real>
DenoiserParamsT<Real> init_denoiser_params(const DenoiserConfig& cfg,
                                           std::uint64_t seed);

// Raw sinusoidal position features: [sin(p*w_0..), cos(p*w_0..)] with
// w_k = 10000^(-2k/D); length D (D even).
std::vector<double> sinusoid_features(double pos, int D);

// Post-MLP embeddings, exposed for testing; forward() uses the same graphs.
template <class Real>
Tensor<Real> embed_timestep(int t, const DenoiserParamsT<Real>& params,
                            const DenoiserConfig& cfg);
template <class Real>
Tensor<Real> embed_age(std::optional<double> age,
                       const DenoiserParamsT<Real>& params,
                       const DenoiserConfig& cfg);

// Optional inspection hook: token count entering each block and the
// post-softmax attention tensors ((B*H, T, T), one per block).
template <class Real>
struct DenoiserProbe {
  std::vector<std::int64_t> token_counts;
  std::vector<Tensor<Real>> attention;
};

// Parameter leaves staged on a tape, in for_each order.
template <class Real>
struct DenoiserLeaves {
  std::vector<typename Tape<Real>::Id> ids;
  std::vector<std::string> names;
};

template <class Real>
DenoiserLeaves<Real> stage_params(Tape<Real>& tape,
                                  const DenoiserParamsT<Real>& params,
                                  bool requires_grad);

template <class Real>
struct DenoiserForward {
  typename Tape<Real>::Id eps;    // (B, F, V_p)
  typename Tape<Real>::Id v_raw;  // pre-sigmoid logits, same shape
  typename Tape<Real>::Id v;      // sigmoid(v_raw)
};

// Builds the full forward graph on `tape` for a batch: x (B, F, V_p),
// per-sample network timesteps t in [0, t_steps), per-sample age or NULL.
template <class Real>
DenoiserForward<Real> denoiser_forward(
    Tape<Real>& tape, const DenoiserLeaves<Real>& leaves,
    const DenoiserConfig& cfg, const Tensor<Real>& x,
    const std::vector<int>& t, const std::vector<std::optional<double>>& age,
    DenoiserProbe<Real>* probe = nullptr);

template <class Real>
struct DenoiserOutput {
  Tensor<Real> eps_pred;  // (B, F, V_p)
  Tensor<Real> v_pred;    // (B, F, V_p), in (0,1)
};

// Convenience inference wrapper (private tape, no gradients).
template <class Real>
DenoiserOutput<Real> denoiser_infer(const DenoiserParamsT<Real>& params,
                                    const DenoiserConfig& cfg,
                                    const Tensor<Real>& x,
                                    const std::vector<int>& t,
                                    const std::vector<std::optional<double>>& age,
                                    DenoiserProbe<Real>* probe = nullptr);

}  // namespace icodiff
