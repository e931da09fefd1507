// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/model/denoiser.hpp"

#include <cmath>

#include "icodiff/rng.hpp"

namespace icodiff {

void validate_config(const DenoiserConfig& cfg) {
  if (cfg.layers < 1) throw ArgumentError("denoiser: layers must be >= 1");
  if (cfg.heads < 1 || cfg.hidden % cfg.heads != 0)
    throw ArgumentError("denoiser: hidden must be divisible by heads");
  if (cfg.hidden % 2 != 0)
    throw ArgumentError("denoiser: hidden must be even for sin/cos features");
  if (cfg.mlp < 1) throw ArgumentError("denoiser: mlp width must be >= 1");
  if (cfg.patch_count < 1 || cfg.patch_len < 1)
    throw ArgumentError("denoiser: patch geometry must be positive");
  if (!(cfg.age_min < cfg.age_max))
    throw ArgumentError("denoiser: need age_min < age_max");
  if (cfg.t_steps < 1) throw ArgumentError("denoiser: t_steps must be >= 1");
}

std::string to_string(ConditioningMode mode) {
  return mode == ConditioningMode::kTokenAppend ? "token-append" : "adaln-zero";
}

ConditioningMode conditioning_mode_from_string(const std::string& s) {
  if (s == "token-append") return ConditioningMode::kTokenAppend;
  if (s == "adaln-zero") return ConditioningMode::kAdaLnZero;
  throw ArgumentError("denoiser: unknown conditioning mode '" + s + "'");
}

std::vector<double> sinusoid_features(double pos, int D) {
  if (D < 2 || D % 2 != 0)
    throw ArgumentError("sinusoid_features: D must be even and >= 2");
  std::vector<double> out(std::size_t(D), 0.0);
  const int half = D / 2;
  for (int k = 0; k < half; ++k) {
    const double omega = std::pow(10000.0, -2.0 * double(k) / double(D));
    out[std::size_t(k)] = std::sin(pos * omega);
    out[std::size_t(half + k)] = std::cos(pos * omega);
  }
  return out;
}

namespace {

double scale_age(double age, const DenoiserConfig& cfg) {
  if (age < cfg.age_min || age > cfg.age_max)
    throw ArgumentError("denoiser: age " + std::to_string(age) +
                        " outside [" + std::to_string(cfg.age_min) + "," +
                        std::to_string(cfg.age_max) + "]");
  return (age - cfg.age_min) / (cfg.age_max - cfg.age_min) * 1000.0;
}

template <class Real>
Tensor<Real> normal_tensor(Shape shape, RngStream& rng, double sigma) {
  Tensor<Real> t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = Real(rng.normal() * sigma);
  return t;
}

}  // namespace

template <class Real>
DenoiserParamsT<Real> init_denoiser_params(const DenoiserConfig& cfg,
                                           std::uint64_t seed) {
  validate_config(cfg);
  const std::int64_t D = cfg.hidden, M = cfg.mlp;
  const std::int64_t F = cfg.patch_count, Vp = cfg.patch_len;
  const bool adaln = cfg.mode == ConditioningMode::kAdaLnZero;
  constexpr double kSigma = 0.02;

  DenoiserParamsT<Real> p;
  std::uint64_t stream_index = 0;
  auto randn = [&](Shape shape) {
    RngStream rng(seed, "init", stream_index++);
    return normal_tensor<Real>(std::move(shape), rng, kSigma);
  };
  auto zeros = [](Shape shape) { return Tensor<Real>(std::move(shape)); };

  p.patch_embed_w = randn({Vp, D});
  p.patch_embed_b = zeros({D});
  p.pos_embed = randn({F, D});
  p.t_w1 = randn({D, D});
  p.t_b1 = zeros({D});
  p.t_w2 = randn({D, D});
  p.t_b2 = zeros({D});
  p.a_w1 = randn({D, D});
  p.a_b1 = zeros({D});
  p.a_w2 = zeros({D, D});  // zero, so embed(age) == embed(NULL) until trained
  p.a_b2 = zeros({D});
  p.null_cond = randn({D});
  p.blocks.resize(std::size_t(cfg.layers));
  for (auto& b : p.blocks) {
    b.qkv_w = randn({D, 3 * D});
    b.qkv_b = zeros({3 * D});
    b.out_w = randn({D, D});
    b.out_b = zeros({D});
    b.ln1_g = Tensor<Real>({D}, std::vector<Real>(std::size_t(D), Real(1)));
    b.ln1_b = zeros({D});
    b.ln2_g = Tensor<Real>({D}, std::vector<Real>(std::size_t(D), Real(1)));
    b.ln2_b = zeros({D});
    b.ffn_w1 = randn({D, M});
    b.ffn_b1 = zeros({M});
    b.ffn_w2 = randn({M, D});
    b.ffn_b2 = zeros({D});
    if (adaln) {
      b.mod_w = zeros({D, 6 * D});
      b.mod_b = zeros({6 * D});
    }
  }
  p.final_ln_g = Tensor<Real>({D}, std::vector<Real>(std::size_t(D), Real(1)));
  p.final_ln_b = zeros({D});
  if (adaln) {
    p.final_mod_w = zeros({D, 2 * D});
    p.final_mod_b = zeros({2 * D});
  }
  p.decoder_w = zeros({D, 2 * Vp});
  p.decoder_b = zeros({2 * Vp});
  return p;
}

template <class Real>
DenoiserLeaves<Real> stage_params(Tape<Real>& tape,
                                  const DenoiserParamsT<Real>& params,
                                  bool requires_grad) {
  DenoiserLeaves<Real> leaves;
  params.for_each([&](const std::string& name, const Tensor<Real>& t) {
    leaves.names.push_back(name);
    leaves.ids.push_back(tape.leaf(t, requires_grad));
  });
  return leaves;
}

namespace {

// Leaf-id lookup by canonical name; lookups are few per forward.
template <class Real>
typename Tape<Real>::Id pid(const DenoiserLeaves<Real>& leaves,
                            const std::string& name) {
  for (std::size_t i = 0; i < leaves.names.size(); ++i)
    if (leaves.names[i] == name) return leaves.ids[i];
  throw ArgumentError("denoiser: no staged parameter named " + name);
}

// Two-layer MLP with GELU on (B, D) rows: x W1 + b1, gelu, W2 + b2.
template <class Real>
typename Tape<Real>::Id cond_mlp(Tape<Real>& tape, typename Tape<Real>::Id x,
                                 typename Tape<Real>::Id w1,
                                 typename Tape<Real>::Id b1,
                                 typename Tape<Real>::Id w2,
                                 typename Tape<Real>::Id b2) {
  auto h = tape.add(tape.matmul(x, w1), b1);
  h = tape.gelu(h);
  return tape.add(tape.matmul(h, w2), b2);
}

// Multi-head self-attention on (B, T, D) tokens.
template <class Real>
typename Tape<Real>::Id attention(Tape<Real>& tape, typename Tape<Real>::Id x,
                                  std::int64_t B, std::int64_t T,
                                  std::int64_t D, std::int64_t H,
                                  typename Tape<Real>::Id qkv_w,
                                  typename Tape<Real>::Id qkv_b,
                                  typename Tape<Real>::Id out_w,
                                  typename Tape<Real>::Id out_b,
                                  Tensor<Real>* attn_out) {
  using Id = typename Tape<Real>::Id;
  const std::int64_t Dh = D / H;
  Id flat = tape.reshape(x, {B * T, D});
  Id qkv = tape.add(tape.matmul(flat, qkv_w), qkv_b);  // (B*T, 3D)
  auto split_heads = [&](Id part) {
    Id r = tape.reshape(part, {B, T, H, Dh});
    r = tape.permute(r, {0, 2, 1, 3});  // (B, H, T, Dh)
    return tape.reshape(r, {B * H, T, Dh});
  };
  Id q = split_heads(tape.slice(qkv, 1, 0, D));
  Id k = split_heads(tape.slice(qkv, 1, D, D));
  Id v = split_heads(tape.slice(qkv, 1, 2 * D, D));
  Id kt = tape.permute(k, {0, 2, 1});  // (B*H, Dh, T)
  Id scores = tape.mul_scalar(tape.bmm(q, kt), Real(1.0 / std::sqrt(double(Dh))));
  Id attn = tape.softmax(scores);  // (B*H, T, T)
  if (attn_out) *attn_out = tape.value(attn);
  Id mixed = tape.bmm(attn, v);  // (B*H, T, Dh)
  mixed = tape.reshape(mixed, {B, H, T, Dh});
  mixed = tape.permute(mixed, {0, 2, 1, 3});  // (B, T, H, Dh)
  mixed = tape.reshape(mixed, {B * T, D});
  Id out = tape.add(tape.matmul(mixed, out_w), out_b);
  return tape.reshape(out, {B, T, D});
}

// FFN on (B, T, D): linear, GELU, linear.
template <class Real>
typename Tape<Real>::Id ffn(Tape<Real>& tape, typename Tape<Real>::Id x,
                            std::int64_t B, std::int64_t T, std::int64_t D,
                            std::int64_t M, typename Tape<Real>::Id w1,
                            typename Tape<Real>::Id b1,
                            typename Tape<Real>::Id w2,
                            typename Tape<Real>::Id b2) {
  using Id = typename Tape<Real>::Id;
  Id flat = tape.reshape(x, {B * T, D});
  Id h = tape.gelu(tape.add(tape.matmul(flat, w1), b1));
  Id out = tape.add(tape.matmul(h, w2), b2);
  (void)M;
  return tape.reshape(out, {B, T, D});
}

}  // namespace

template <class Real>
DenoiserForward<Real> denoiser_forward(
    Tape<Real>& tape, const DenoiserLeaves<Real>& leaves,
    const DenoiserConfig& cfg, const Tensor<Real>& x,
    const std::vector<int>& t, const std::vector<std::optional<double>>& age,
    DenoiserProbe<Real>* probe) {
  using Id = typename Tape<Real>::Id;
  validate_config(cfg);
  const std::int64_t F = cfg.patch_count, Vp = cfg.patch_len;
  const std::int64_t D = cfg.hidden, M = cfg.mlp, H = cfg.heads;
  if (x.rank() != 3 || x.dim(1) != F || x.dim(2) != Vp)
    throw ArgumentError("denoiser: input shape " + shape_str(x.shape()) +
                        ", expected (B," + std::to_string(F) + "," +
                        std::to_string(Vp) + ")");
  const std::int64_t B = x.dim(0);
  if (std::int64_t(t.size()) != B || std::int64_t(age.size()) != B)
    throw ArgumentError("denoiser: t/age lists must match batch size");
  for (int ti : t)
    if (ti < 0 || ti >= cfg.t_steps)
      throw ArgumentError("denoiser: timestep index " + std::to_string(ti) +
                          " outside 0.." + std::to_string(cfg.t_steps - 1));

  auto P = [&](const char* name) { return pid(leaves, name); };

  // Patch tokens: rows through the shared linear embed, plus positions.
  Id x_id = tape.leaf(x, false);
  Id tok = tape.matmul(tape.reshape(x_id, {B * F, Vp}), P("patch_embed.w"));
  tok = tape.add(tok, P("patch_embed.b"));
  tok = tape.reshape(tok, {B, F, D});
  tok = tape.add(tok, P("pos_embed"));

  // Timestep features -> MLP.
  Tensor<Real> t_feat({B, D});
  for (std::int64_t i = 0; i < B; ++i) {
    const auto feats = sinusoid_features(double(t[std::size_t(i)]), int(D));
    for (std::int64_t j = 0; j < D; ++j)
      t_feat.at(i, j) = Real(feats[std::size_t(j)]);
  }
  Id t_emb = cond_mlp(tape, tape.leaf(t_feat, false), P("t_mlp.w1"),
                      P("t_mlp.b1"), P("t_mlp.w2"), P("t_mlp.b2"));

  // Age features -> MLP, masked to zero on NULL rows, anchored at null_cond.
  Tensor<Real> a_feat({B, D});
  Tensor<Real> a_mask({B, D});
  for (std::int64_t i = 0; i < B; ++i) {
    if (age[std::size_t(i)].has_value()) {
      const auto feats =
          sinusoid_features(scale_age(*age[std::size_t(i)], cfg), int(D));
      for (std::int64_t j = 0; j < D; ++j) {
        a_feat.at(i, j) = Real(feats[std::size_t(j)]);
        a_mask.at(i, j) = Real(1);
      }
    }
  }
  Id a_mlp = cond_mlp(tape, tape.leaf(a_feat, false), P("a_mlp.w1"),
                      P("a_mlp.b1"), P("a_mlp.w2"), P("a_mlp.b2"));
  Id a_emb = tape.add(tape.mul(a_mlp, tape.leaf(a_mask, false)), P("null_cond"));

  const bool adaln = cfg.mode == ConditioningMode::kAdaLnZero;
  Id cond = 0;
  std::int64_t T_tok = F;
  if (adaln) {
    cond = tape.gelu(tape.add(t_emb, a_emb));  // (B, D)
  } else {
    Id t_tok = tape.reshape(t_emb, {B, 1, D});
    Id a_tok = tape.reshape(a_emb, {B, 1, D});
    tok = tape.concat({t_tok, a_tok, tok}, 1);
    T_tok = F + 2;
  }

  for (int layer = 0; layer < cfg.layers; ++layer) {
    const std::string bp = "block" + std::to_string(layer) + ".";
    if (probe) probe->token_counts.push_back(T_tok);
    Tensor<Real> attn_cap;
    Tensor<Real>* attn_ptr = probe ? &attn_cap : nullptr;

    if (adaln) {
      Id mod = tape.add(tape.matmul(cond, P((bp + "mod.w").c_str())),
                        P((bp + "mod.b").c_str()));  // (B, 6D)
      auto piece = [&](int k) {
        return tape.expand_middle(tape.slice(mod, 1, k * D, D), T_tok);
      };
      Id h = tape.layernorm(tok, P((bp + "ln1.g").c_str()),
                            P((bp + "ln1.b").c_str()));
      h = tape.add(tape.mul(h, tape.add_scalar(piece(1), Real(1))), piece(0));
      h = attention(tape, h, B, T_tok, D, H, P((bp + "qkv.w").c_str()),
                    P((bp + "qkv.b").c_str()), P((bp + "out.w").c_str()),
                    P((bp + "out.b").c_str()), attn_ptr);
      tok = tape.add(tok, tape.mul(h, piece(2)));
      Id h2 = tape.layernorm(tok, P((bp + "ln2.g").c_str()),
                             P((bp + "ln2.b").c_str()));
      h2 = tape.add(tape.mul(h2, tape.add_scalar(piece(4), Real(1))), piece(3));
      h2 = ffn(tape, h2, B, T_tok, D, M, P((bp + "ffn.w1").c_str()),
               P((bp + "ffn.b1").c_str()), P((bp + "ffn.w2").c_str()),
               P((bp + "ffn.b2").c_str()));
      tok = tape.add(tok, tape.mul(h2, piece(5)));
    } else {
      Id h = tape.layernorm(tok, P((bp + "ln1.g").c_str()),
                            P((bp + "ln1.b").c_str()));
      h = attention(tape, h, B, T_tok, D, H, P((bp + "qkv.w").c_str()),
                    P((bp + "qkv.b").c_str()), P((bp + "out.w").c_str()),
                    P((bp + "out.b").c_str()), attn_ptr);
      tok = tape.add(tok, h);
      Id h2 = tape.layernorm(tok, P((bp + "ln2.g").c_str()),
                             P((bp + "ln2.b").c_str()));
      h2 = ffn(tape, h2, B, T_tok, D, M, P((bp + "ffn.w1").c_str()),
               P((bp + "ffn.b1").c_str()), P((bp + "ffn.w2").c_str()),
               P((bp + "ffn.b2").c_str()));
      tok = tape.add(tok, h2);
    }
    if (probe) probe->attention.push_back(std::move(attn_cap));
  }

  if (!adaln && T_tok != F) tok = tape.slice(tok, 1, 2, F);

  Id h = tape.layernorm(tok, P("final_ln.g"), P("final_ln.b"));
  if (adaln) {
    Id mod = tape.add(tape.matmul(cond, P("final_mod.w")), P("final_mod.b"));
    Id shift = tape.expand_middle(tape.slice(mod, 1, 0, D), F);
    Id scale = tape.expand_middle(tape.slice(mod, 1, D, D), F);
    h = tape.add(tape.mul(h, tape.add_scalar(scale, Real(1))), shift);
  }
  Id dec = tape.add(tape.matmul(tape.reshape(h, {B * F, D}), P("decoder.w")),
                    P("decoder.b"));  // (B*F, 2Vp)
  Id eps = tape.reshape(tape.slice(dec, 1, 0, Vp), {B, F, Vp});
  Id v_raw = tape.reshape(tape.slice(dec, 1, Vp, Vp), {B, F, Vp});
  Id v = tape.sigmoid(v_raw);
  return {eps, v_raw, v};
}

template <class Real>
DenoiserOutput<Real> denoiser_infer(const DenoiserParamsT<Real>& params,
                                    const DenoiserConfig& cfg,
                                    const Tensor<Real>& x,
                                    const std::vector<int>& t,
                                    const std::vector<std::optional<double>>& age,
                                    DenoiserProbe<Real>* probe) {
  Tape<Real> tape;
  auto leaves = stage_params(tape, params, false);
  auto fwd = denoiser_forward(tape, leaves, cfg, x, t, age, probe);
  return {tape.value(fwd.eps), tape.value(fwd.v)};
}

template <class Real>
Tensor<Real> embed_timestep(int t, const DenoiserParamsT<Real>& params,
                            const DenoiserConfig& cfg) {
  validate_config(cfg);
  if (t < 0 || t >= cfg.t_steps)
    throw ArgumentError("denoiser: timestep index " + std::to_string(t) +
                        " outside 0.." + std::to_string(cfg.t_steps - 1));
  const std::int64_t D = cfg.hidden;
  Tensor<Real> feat({1, D});
  const auto feats = sinusoid_features(double(t), int(D));
  for (std::int64_t j = 0; j < D; ++j) feat.at(0, j) = Real(feats[std::size_t(j)]);
  Tape<Real> tape;
  auto id = cond_mlp(tape, tape.leaf(feat, false), tape.leaf(params.t_w1, false),
                     tape.leaf(params.t_b1, false), tape.leaf(params.t_w2, false),
                     tape.leaf(params.t_b2, false));
  return Tensor<Real>({D}, tape.value(id).vec());
}

template <class Real>
Tensor<Real> embed_age(std::optional<double> age,
                       const DenoiserParamsT<Real>& params,
                       const DenoiserConfig& cfg) {
  validate_config(cfg);
  if (!age.has_value()) return params.null_cond;
  const std::int64_t D = cfg.hidden;
  Tensor<Real> feat({1, D});
  const auto feats = sinusoid_features(scale_age(*age, cfg), int(D));
  for (std::int64_t j = 0; j < D; ++j) feat.at(0, j) = Real(feats[std::size_t(j)]);
  Tape<Real> tape;
  auto id = cond_mlp(tape, tape.leaf(feat, false), tape.leaf(params.a_w1, false),
                     tape.leaf(params.a_b1, false), tape.leaf(params.a_w2, false),
                     tape.leaf(params.a_b2, false));
  Tensor<Real> out({D}, tape.value(id).vec());
  for (std::int64_t j = 0; j < D; ++j) out[j] += params.null_cond[j];
  return out;
}

template DenoiserParamsT<float> init_denoiser_params(const DenoiserConfig&,
                                                     std::uint64_t);
template DenoiserParamsT<double> init_denoiser_params(const DenoiserConfig&,
                                                      std::uint64_t);
template DenoiserLeaves<float> stage_params(Tape<float>&,
                                            const DenoiserParamsT<float>&, bool);
template DenoiserLeaves<double> stage_params(Tape<double>&,
                                             const DenoiserParamsT<double>&,
                                             bool);
template DenoiserForward<float> denoiser_forward(
    Tape<float>&, const DenoiserLeaves<float>&, const DenoiserConfig&,
    const Tensor<float>&, const std::vector<int>&,
    const std::vector<std::optional<double>>&, DenoiserProbe<float>*);
template DenoiserForward<double> denoiser_forward(
    Tape<double>&, const DenoiserLeaves<double>&, const DenoiserConfig&,
    const Tensor<double>&, const std::vector<int>&,
    const std::vector<std::optional<double>>&, DenoiserProbe<double>*);
template DenoiserOutput<float> denoiser_infer(
    const DenoiserParamsT<float>&, const DenoiserConfig&, const Tensor<float>&,
    const std::vector<int>&, const std::vector<std::optional<double>>&,
    DenoiserProbe<float>*);
template DenoiserOutput<double> denoiser_infer(
    const DenoiserParamsT<double>&, const DenoiserConfig&,
    const Tensor<double>&, const std::vector<int>&,
    const std::vector<std::optional<double>>&, DenoiserProbe<double>*);
template Tensor<float> embed_timestep(int, const DenoiserParamsT<float>&,
                                      const DenoiserConfig&);
template Tensor<double> embed_timestep(int, const DenoiserParamsT<double>&,
                                       const DenoiserConfig&);
template Tensor<float> embed_age(std::optional<double>,
                                 const DenoiserParamsT<float>&,
                                 const DenoiserConfig&);
template Tensor<double> embed_age(std::optional<double>,
                                  const DenoiserParamsT<double>&,
                                   const DenoiserConfig&);

}  // namespace icodiff
