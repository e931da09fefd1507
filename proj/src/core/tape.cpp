// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/core/tape.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace icodiff {

namespace {

template <class Real>
void check_finite(const Tensor<Real>& t, const char* opname) {
  for (std::int64_t i = 0; i < t.numel(); ++i)
    if (!std::isfinite(double(t[i])))
      throw NumericError(std::string(opname) + ": non-finite result");
}

// b broadcasts against a if b's shape equals a trailing suffix of a's shape
// (a scalar b is the empty suffix).
bool suffix_broadcastable(const Shape& a, const Shape& b) {
  if (b.size() > a.size()) return false;
  const std::size_t off = a.size() - b.size();
  for (std::size_t i = 0; i < b.size(); ++i)
    if (a[off + i] != b[i]) return false;
  return true;
}

void gemm(const Tensor<float>& a, const Tensor<float>& b, Tensor<float>& c,
          bool trans_a, bool trans_b, std::int64_t m, std::int64_t n,
          std::int64_t k, std::int64_t a_off, std::int64_t b_off,
          std::int64_t c_off, float beta) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, int(m), int(n), int(k), 1.0f,
              a.data() + a_off, int(trans_a ? m : k), b.data() + b_off,
              int(trans_b ? k : n), beta, c.data() + c_off, int(n));
}

void gemm(const Tensor<double>& a, const Tensor<double>& b, Tensor<double>& c,
          bool trans_a, bool trans_b, std::int64_t m, std::int64_t n,
          std::int64_t k, std::int64_t a_off, std::int64_t b_off,
          std::int64_t c_off, double beta) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, int(m), int(n), int(k), 1.0,
              a.data() + a_off, int(trans_a ? m : k), b.data() + b_off,
              int(trans_b ? k : n), beta, c.data() + c_off, int(n));
}

std::vector<std::int64_t> row_major_strides(const Shape& s) {
  std::vector<std::int64_t> st(s.size(), 1);
  for (int i = int(s.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * s[i + 1];
  return st;
}

}  // namespace

template <class Real>
typename Tape<Real>::Id Tape<Real>::push(Tensor<Real> value, bool requires_grad,
                                         std::function<void(Tape&, Id)> backprop,
                                         const char* opname) {
  check_finite(value, opname);
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Id(nodes_.size() - 1);
}

template <class Real>
void Tape<Real>::accumulate(Id id, const Tensor<Real>& g) {
  Node& n = nodes_[std::size_t(id)];
  if (!n.requires_grad) return;
  if (n.grad.numel() == 0) n.grad = Tensor<Real>(n.value.shape());
  for (std::int64_t i = 0; i < g.numel(); ++i) n.grad[i] += g[i];
}

template <class Real>
void Tape<Real>::accumulate_reduced(Id id, const Tensor<Real>& g) {
  Node& n = nodes_[std::size_t(id)];
  if (!n.requires_grad) return;
  if (n.grad.numel() == 0) n.grad = Tensor<Real>(n.value.shape());
  const std::int64_t inner = n.value.numel();
  const std::int64_t outer = g.numel() / inner;
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) n.grad[i] += g[o * inner + i];
}

template <class Real>
const Tensor<Real>& Tape<Real>::grad(Id id) const {
  const Node& n = nodes_[std::size_t(id)];
  if (n.grad.numel() == 0) {
    static thread_local Tensor<Real> zero;
    zero = Tensor<Real>(n.value.shape());
    return zero;
  }
  return n.grad;
}

template <class Real>
void Tape<Real>::clear() {
  nodes_.clear();
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::leaf(Tensor<Real> value, bool requires_grad) {
  return push(std::move(value), requires_grad, {}, "leaf");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::add(Id a, Id b) {
  const Tensor<Real>& va = value(a);
  const Tensor<Real>& vb = value(b);
  if (!suffix_broadcastable(va.shape(), vb.shape()))
    throw ArgumentError("add: shapes " + shape_str(va.shape()) + " vs " +
                        shape_str(vb.shape()));
  Tensor<Real> out = va;
  const std::int64_t inner = vb.numel();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += vb[i % inner];
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg,
              [a, b](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                t.accumulate(a, g);
                t.accumulate_reduced(b, g);
              },
              "add");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::sub(Id a, Id b) {
  const Tensor<Real>& va = value(a);
  const Tensor<Real>& vb = value(b);
  if (!va.same_shape(vb))
    throw ArgumentError("sub: shapes " + shape_str(va.shape()) + " vs " +
                        shape_str(vb.shape()));
  Tensor<Real> out = va;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg,
              [a, b](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                t.accumulate(a, g);
                Tensor<Real> neg = g;
                for (std::int64_t i = 0; i < neg.numel(); ++i) neg[i] = -neg[i];
                t.accumulate(b, neg);
              },
              "sub");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::mul(Id a, Id b) {
  const Tensor<Real>& va = value(a);
  const Tensor<Real>& vb = value(b);
  if (!suffix_broadcastable(va.shape(), vb.shape()))
    throw ArgumentError("mul: shapes " + shape_str(va.shape()) + " vs " +
                        shape_str(vb.shape()));
  Tensor<Real> out = va;
  const std::int64_t inner = vb.numel();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= vb[i % inner];
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg,
              [a, b](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                const Tensor<Real>& va = t.value(a);
                const Tensor<Real>& vb = t.value(b);
                const std::int64_t inner = vb.numel();
                Tensor<Real> ga(va.shape());
                for (std::int64_t i = 0; i < ga.numel(); ++i)
                  ga[i] = g[i] * vb[i % inner];
                t.accumulate(a, ga);
                Tensor<Real> gb(g.shape());
                for (std::int64_t i = 0; i < gb.numel(); ++i) gb[i] = g[i] * va[i];
                t.accumulate_reduced(b, gb);
              },
              "mul");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::add_scalar(Id a, Real c) {
  Tensor<Real> out = value(a);
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += c;
  return push(std::move(out), requires_grad(a),
              [a](Tape& t, Id self) { t.accumulate(a, t.grad(self)); },
              "add_scalar");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::mul_scalar(Id a, Real c) {
  Tensor<Real> out = value(a);
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= c;
  return push(std::move(out), requires_grad(a),
              [a, c](Tape& t, Id self) {
                Tensor<Real> g = t.grad(self);
                for (std::int64_t i = 0; i < g.numel(); ++i) g[i] *= c;
                t.accumulate(a, g);
              },
              "mul_scalar");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::matmul(Id a, Id b) {
  const Tensor<Real>& va = value(a);
  const Tensor<Real>& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(0))
    throw ArgumentError("matmul: shapes " + shape_str(va.shape()) + " vs " +
                        shape_str(vb.shape()));
  const std::int64_t m = va.dim(0), k = va.dim(1), n = vb.dim(1);
  Tensor<Real> out({m, n});
  gemm(va, vb, out, false, false, m, n, k, 0, 0, 0, Real(0));
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg,
              [a, b, m, n, k](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                if (t.requires_grad(a)) {
                  Tensor<Real> ga({m, k});  // g . b^T
                  gemm(g, t.value(b), ga, false, true, m, k, n, 0, 0, 0, Real(0));
                  t.accumulate(a, ga);
                }
                if (t.requires_grad(b)) {
                  Tensor<Real> gb({k, n});  // a^T . g
                  gemm(t.value(a), g, gb, true, false, k, n, m, 0, 0, 0, Real(0));
                  t.accumulate(b, gb);
                }
              },
              "matmul");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::bmm(Id a, Id b) {
  const Tensor<Real>& va = value(a);
  const Tensor<Real>& vb = value(b);
  if (va.rank() != 3 || vb.rank() != 3 || va.dim(0) != vb.dim(0) ||
      va.dim(2) != vb.dim(1))
    throw ArgumentError("bmm: shapes " + shape_str(va.shape()) + " vs " +
                        shape_str(vb.shape()));
  const std::int64_t bs = va.dim(0), m = va.dim(1), k = va.dim(2), n = vb.dim(2);
  Tensor<Real> out({bs, m, n});
  for (std::int64_t i = 0; i < bs; ++i)
    gemm(va, vb, out, false, false, m, n, k, i * m * k, i * k * n, i * m * n,
         Real(0));
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg,
              [a, b, bs, m, n, k](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                if (t.requires_grad(a)) {
                  Tensor<Real> ga({bs, m, k});
                  for (std::int64_t i = 0; i < bs; ++i)
                    gemm(g, t.value(b), ga, false, true, m, k, n, i * m * n,
                         i * k * n, i * m * k, Real(0));
                  t.accumulate(a, ga);
                }
                if (t.requires_grad(b)) {
                  Tensor<Real> gb({bs, k, n});
                  for (std::int64_t i = 0; i < bs; ++i)
                    gemm(t.value(a), g, gb, true, false, k, n, m, i * m * k,
                         i * m * n, i * k * n, Real(0));
                  t.accumulate(b, gb);
                }
              },
              "bmm");
}

namespace {

template <class Real>
Tensor<Real> permute_tensor(const Tensor<Real>& in, const std::vector<int>& axes) {
  const int r = in.rank();
  Shape out_shape(axes.size(), 0);
  for (int i = 0; i < r; ++i) out_shape[std::size_t(i)] = in.dim(axes[std::size_t(i)]);
  Tensor<Real> out(out_shape);
  const auto in_strides = row_major_strides(in.shape());
  const auto out_strides = row_major_strides(out_shape);
  std::vector<std::int64_t> idx(std::size_t(r), 0);
  for (std::int64_t o = 0; o < out.numel(); ++o) {
    std::int64_t rem = o, src = 0;
    for (int i = 0; i < r; ++i) {
      const std::int64_t c = rem / out_strides[std::size_t(i)];
      rem %= out_strides[std::size_t(i)];
      src += c * in_strides[std::size_t(axes[std::size_t(i)])];
    }
    out[o] = in[src];
  }
  return out;
}

}  // namespace

template <class Real>
typename Tape<Real>::Id Tape<Real>::permute(Id a, const std::vector<int>& axes) {
  const Tensor<Real>& va = value(a);
  if (int(axes.size()) != va.rank())
    throw ArgumentError("permute: axes rank mismatch");
  std::vector<int> seen(axes.size(), 0);
  for (int ax : axes) {
    if (ax < 0 || ax >= va.rank() || seen[std::size_t(ax)]++)
      throw ArgumentError("permute: invalid axis list");
  }
  Tensor<Real> out = permute_tensor(va, axes);
  std::vector<int> inv(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) inv[std::size_t(axes[i])] = int(i);
  return push(std::move(out), requires_grad(a),
              [a, inv](Tape& t, Id self) {
                t.accumulate(a, permute_tensor(t.grad(self), inv));
              },
              "permute");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::reshape(Id a, Shape shape) {
  const Tensor<Real>& va = value(a);
  if (shape_numel(shape) != va.numel())
    throw ArgumentError("reshape: element count mismatch " +
                        shape_str(va.shape()) + " -> " + shape_str(shape));
  Tensor<Real> out(shape, va.vec());
  Shape orig = va.shape();
  return push(std::move(out), requires_grad(a),
              [a, orig](Tape& t, Id self) {
                t.accumulate(a, Tensor<Real>(orig, t.grad(self).vec()));
              },
              "reshape");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::concat(const std::vector<Id>& parts, int axis) {
  if (parts.empty()) throw ArgumentError("concat: no inputs");
  const Tensor<Real>& first = value(parts[0]);
  const int r = first.rank();
  if (axis < 0 || axis >= r) throw ArgumentError("concat: axis out of range");
  std::int64_t axis_total = 0;
  for (Id p : parts) {
    const Tensor<Real>& v = value(p);
    if (v.rank() != r) throw ArgumentError("concat: rank mismatch");
    for (int i = 0; i < r; ++i)
      if (i != axis && v.dim(i) != first.dim(i))
        throw ArgumentError("concat: shape mismatch off the concat axis");
    axis_total += v.dim(axis);
  }
  Shape out_shape = first.shape();
  out_shape[std::size_t(axis)] = axis_total;
  Tensor<Real> out(out_shape);
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= first.dim(i);
  for (int i = axis + 1; i < r; ++i) inner *= first.dim(i);
  std::int64_t axis_off = 0;
  bool rg = false;
  for (Id p : parts) {
    const Tensor<Real>& v = value(p);
    const std::int64_t na = v.dim(axis);
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(v.data() + o * na * inner, na * inner,
                  out.data() + (o * axis_total + axis_off) * inner);
    axis_off += na;
    rg = rg || requires_grad(p);
  }
  std::vector<Id> ps = parts;
  return push(std::move(out), rg,
              [ps, axis, outer, inner, axis_total](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                std::int64_t axis_off = 0;
                for (Id p : ps) {
                  const std::int64_t na = t.value(p).dim(axis);
                  Tensor<Real> gp(t.value(p).shape());
                  for (std::int64_t o = 0; o < outer; ++o)
                    std::copy_n(g.data() + (o * axis_total + axis_off) * inner,
                                na * inner, gp.data() + o * na * inner);
                  t.accumulate(p, gp);
                  axis_off += na;
                }
              },
              "concat");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::slice(Id a, int axis, std::int64_t start,
                                          std::int64_t len) {
  const Tensor<Real>& va = value(a);
  const int r = va.rank();
  if (axis < 0 || axis >= r) throw ArgumentError("slice: axis out of range");
  if (start < 0 || len <= 0 || start + len > va.dim(axis))
    throw ArgumentError("slice: range out of bounds");
  Shape out_shape = va.shape();
  out_shape[std::size_t(axis)] = len;
  Tensor<Real> out(out_shape);
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= va.dim(i);
  for (int i = axis + 1; i < r; ++i) inner *= va.dim(i);
  const std::int64_t na = va.dim(axis);
  for (std::int64_t o = 0; o < outer; ++o)
    std::copy_n(va.data() + (o * na + start) * inner, len * inner,
                out.data() + o * len * inner);
  return push(std::move(out), requires_grad(a),
              [a, start, len, outer, inner, na](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                Tensor<Real> ga(t.value(a).shape());
                for (std::int64_t o = 0; o < outer; ++o)
                  std::copy_n(g.data() + o * len * inner, len * inner,
                              ga.data() + (o * na + start) * inner);
                t.accumulate(a, ga);
              },
              "slice");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::expand_middle(Id a, std::int64_t t_len) {
  const Tensor<Real>& va = value(a);
  if (va.rank() != 2 || t_len <= 0)
    throw ArgumentError("expand_middle: expects rank-2 input");
  const std::int64_t b = va.dim(0), d = va.dim(1);
  Tensor<Real> out({b, t_len, d});
  for (std::int64_t i = 0; i < b; ++i)
    for (std::int64_t j = 0; j < t_len; ++j)
      std::copy_n(va.data() + i * d, d, out.data() + (i * t_len + j) * d);
  return push(std::move(out), requires_grad(a),
              [a, b, t_len, d](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                Tensor<Real> ga({b, d});
                for (std::int64_t i = 0; i < b; ++i)
                  for (std::int64_t j = 0; j < t_len; ++j)
                    for (std::int64_t x = 0; x < d; ++x)
                      ga.at(i, x) += g[(i * t_len + j) * d + x];
                t.accumulate(a, ga);
              },
              "expand_middle");
}

namespace {

template <class Real, class F>
Tensor<Real> map_tensor(const Tensor<Real>& in, F f) {
  Tensor<Real> out = in;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = f(out[i]);
  return out;
}

constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;

}  // namespace

template <class Real>
typename Tape<Real>::Id Tape<Real>::tanh_(Id a) {
  Tensor<Real> out = map_tensor(value(a), [](Real x) { return Real(std::tanh(double(x))); });
  return push(std::move(out), requires_grad(a),
              [a](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                const Tensor<Real>& y = t.value(self);
                Tensor<Real> ga(y.shape());
                for (std::int64_t i = 0; i < ga.numel(); ++i)
                  ga[i] = g[i] * (Real(1) - y[i] * y[i]);
                t.accumulate(a, ga);
              },
              "tanh");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::gelu(Id a) {
  Tensor<Real> out = map_tensor(value(a), [](Real x) {
    const double xd = double(x);
    const double u = kGeluC0 * (xd + kGeluC1 * xd * xd * xd);
    return Real(0.5 * xd * (1.0 + std::tanh(u)));
  });
  return push(std::move(out), requires_grad(a),
              [a](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                const Tensor<Real>& x = t.value(a);
                Tensor<Real> ga(x.shape());
                for (std::int64_t i = 0; i < ga.numel(); ++i) {
                  const double xd = double(x[i]);
                  const double u = kGeluC0 * (xd + kGeluC1 * xd * xd * xd);
                  const double th = std::tanh(u);
                  const double du = kGeluC0 * (1.0 + 3.0 * kGeluC1 * xd * xd);
                  const double d = 0.5 * (1.0 + th) + 0.5 * xd * (1.0 - th * th) * du;
                  ga[i] = g[i] * Real(d);
                }
                t.accumulate(a, ga);
              },
              "gelu");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::exp_(Id a) {
  Tensor<Real> out = map_tensor(value(a), [](Real x) { return Real(std::exp(double(x))); });
  return push(std::move(out), requires_grad(a),
              [a](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                const Tensor<Real>& y = t.value(self);
                Tensor<Real> ga(y.shape());
                for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] = g[i] * y[i];
                t.accumulate(a, ga);
              },
              "exp");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::log_(Id a) {
  Tensor<Real> out = map_tensor(value(a), [](Real x) { return Real(std::log(double(x))); });
  return push(std::move(out), requires_grad(a),
              [a](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                const Tensor<Real>& x = t.value(a);
                Tensor<Real> ga(x.shape());
                for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] = g[i] / x[i];
                t.accumulate(a, ga);
              },
              "log");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::sqrt_(Id a) {
  Tensor<Real> out = map_tensor(value(a), [](Real x) { return Real(std::sqrt(double(x))); });
  return push(std::move(out), requires_grad(a),
              [a](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                const Tensor<Real>& y = t.value(self);
                Tensor<Real> ga(y.shape());
                for (std::int64_t i = 0; i < ga.numel(); ++i)
                  ga[i] = g[i] / (Real(2) * y[i]);
                t.accumulate(a, ga);
              },
              "sqrt");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::sigmoid(Id a) {
  Tensor<Real> out = map_tensor(value(a), [](Real x) {
    return Real(1.0 / (1.0 + std::exp(-double(x))));
  });
  return push(std::move(out), requires_grad(a),
              [a](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                const Tensor<Real>& y = t.value(self);
                Tensor<Real> ga(y.shape());
                for (std::int64_t i = 0; i < ga.numel(); ++i)
                  ga[i] = g[i] * y[i] * (Real(1) - y[i]);
                t.accumulate(a, ga);
              },
              "sigmoid");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::softmax(Id a) {
  const Tensor<Real>& va = value(a);
  if (va.rank() < 1) throw ArgumentError("softmax: needs rank >= 1");
  const std::int64_t d = va.dim(va.rank() - 1);
  const std::int64_t rows = va.numel() / d;
  Tensor<Real> out(va.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    const Real* in = va.data() + r * d;
    Real* o = out.data() + r * d;
    Real mx = in[0];
    for (std::int64_t i = 1; i < d; ++i) mx = std::max(mx, in[i]);
    double sum = 0;
    for (std::int64_t i = 0; i < d; ++i) {
      o[i] = Real(std::exp(double(in[i] - mx)));
      sum += double(o[i]);
    }
    for (std::int64_t i = 0; i < d; ++i) o[i] = Real(double(o[i]) / sum);
  }
  return push(std::move(out), requires_grad(a),
              [a, d, rows](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                const Tensor<Real>& y = t.value(self);
                Tensor<Real> ga(y.shape());
                for (std::int64_t r = 0; r < rows; ++r) {
                  const Real* gr = g.data() + r * d;
                  const Real* yr = y.data() + r * d;
                  double dot = 0;
                  for (std::int64_t i = 0; i < d; ++i) dot += double(gr[i]) * double(yr[i]);
                  Real* o = ga.data() + r * d;
                  for (std::int64_t i = 0; i < d; ++i)
                    o[i] = yr[i] * (gr[i] - Real(dot));
                }
                t.accumulate(a, ga);
              },
              "softmax");
}

namespace {

// Shared layernorm forward; writes per-row (mean, invstd) into `stats`.
template <class Real>
Tensor<Real> layernorm_forward(const Tensor<Real>& x, Real eps,
                               std::vector<Real>& stats) {
  const std::int64_t d = x.dim(x.rank() - 1);
  const std::int64_t rows = x.numel() / d;
  Tensor<Real> out(x.shape());
  stats.resize(std::size_t(2 * rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const Real* in = x.data() + r * d;
    double mean = 0;
    for (std::int64_t i = 0; i < d; ++i) mean += double(in[i]);
    mean /= double(d);
    double var = 0;
    for (std::int64_t i = 0; i < d; ++i) {
      const double c = double(in[i]) - mean;
      var += c * c;
    }
    var /= double(d);
    const double invstd = 1.0 / std::sqrt(var + double(eps));
    stats[std::size_t(2 * r)] = Real(mean);
    stats[std::size_t(2 * r + 1)] = Real(invstd);
    Real* o = out.data() + r * d;
    for (std::int64_t i = 0; i < d; ++i)
      o[i] = Real((double(in[i]) - mean) * invstd);
  }
  return out;
}

// dx for layernorm given dxhat, using saved (mean, invstd).
template <class Real>
void layernorm_backward_rows(const Tensor<Real>& x, const std::vector<Real>& stats,
                             const Tensor<Real>& dxhat, Tensor<Real>& dx) {
  const std::int64_t d = x.dim(x.rank() - 1);
  const std::int64_t rows = x.numel() / d;
  for (std::int64_t r = 0; r < rows; ++r) {
    const Real mean = stats[std::size_t(2 * r)];
    const Real invstd = stats[std::size_t(2 * r + 1)];
    const Real* xr = x.data() + r * d;
    const Real* gh = dxhat.data() + r * d;
    double sum_g = 0, sum_gx = 0;
    for (std::int64_t i = 0; i < d; ++i) {
      const double xh = double(xr[i] - mean) * double(invstd);
      sum_g += double(gh[i]);
      sum_gx += double(gh[i]) * xh;
    }
    sum_g /= double(d);
    sum_gx /= double(d);
    Real* o = dx.data() + r * d;
    for (std::int64_t i = 0; i < d; ++i) {
      const double xh = double(xr[i] - mean) * double(invstd);
      o[i] += Real(double(invstd) * (double(gh[i]) - sum_g - xh * sum_gx));
    }
  }
}

}  // namespace

template <class Real>
typename Tape<Real>::Id Tape<Real>::layernorm(Id x, Id gamma, Id beta) {
  const Tensor<Real>& vx = value(x);
  const std::int64_t d = vx.dim(vx.rank() - 1);
  if (value(gamma).shape() != Shape{d} || value(beta).shape() != Shape{d})
    throw ArgumentError("layernorm: affine parameters must have shape (" +
                        std::to_string(d) + ")");
  std::vector<Real> stats;
  Tensor<Real> xhat = layernorm_forward(vx, layernorm_eps, stats);
  Tensor<Real> out(vx.shape());
  const std::int64_t rows = vx.numel() / d;
  const Tensor<Real>& g = value(gamma);
  const Tensor<Real>& b = value(beta);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t i = 0; i < d; ++i)
      out[r * d + i] = xhat[r * d + i] * g[i] + b[i];
  const bool rg = requires_grad(x) || requires_grad(gamma) || requires_grad(beta);
  Id id = push(std::move(out), rg,
               [x, gamma, beta, d, rows](Tape& t, Id self) {
                 const Tensor<Real>& go = t.grad(self);
                 const Tensor<Real>& vx = t.value(x);
                 const Tensor<Real>& vg = t.value(gamma);
                 const std::vector<Real>& stats = t.nodes_[std::size_t(self)].saved;
                 if (t.requires_grad(gamma) || t.requires_grad(beta)) {
                   Tensor<Real> dg({d}), db({d});
                   for (std::int64_t r = 0; r < rows; ++r) {
                     const Real mean = stats[std::size_t(2 * r)];
                     const Real invstd = stats[std::size_t(2 * r + 1)];
                     for (std::int64_t i = 0; i < d; ++i) {
                       const Real xh = (vx[r * d + i] - mean) * invstd;
                       dg[i] += go[r * d + i] * xh;
                       db[i] += go[r * d + i];
                     }
                   }
                   t.accumulate(gamma, dg);
                   t.accumulate(beta, db);
                 }
                 if (t.requires_grad(x)) {
                   Tensor<Real> dxhat(vx.shape());
                   for (std::int64_t r = 0; r < rows; ++r)
                     for (std::int64_t i = 0; i < d; ++i)
                       dxhat[r * d + i] = go[r * d + i] * vg[i];
                   Tensor<Real> dx(vx.shape());
                   layernorm_backward_rows(vx, stats, dxhat, dx);
                   t.accumulate(x, dx);
                 }
               },
               "layernorm");
  nodes_[std::size_t(id)].saved = std::move(stats);
  return id;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::layernorm(Id x) {
  const Tensor<Real>& vx = value(x);
  std::vector<Real> stats;
  Tensor<Real> out = layernorm_forward(vx, layernorm_eps, stats);
  Id id = push(std::move(out), requires_grad(x),
               [x](Tape& t, Id self) {
                 const Tensor<Real>& go = t.grad(self);
                 const Tensor<Real>& vx = t.value(x);
                 const std::vector<Real>& stats = t.nodes_[std::size_t(self)].saved;
                 Tensor<Real> dx(vx.shape());
                 layernorm_backward_rows(vx, stats, go, dx);
                 t.accumulate(x, dx);
               },
               "layernorm");
  nodes_[std::size_t(id)].saved = std::move(stats);
  return id;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::embedding(Id table, std::vector<std::int64_t> indices) {
  const Tensor<Real>& vt = value(table);
  if (vt.rank() != 2) throw ArgumentError("embedding: table must be rank 2");
  const std::int64_t v = vt.dim(0), d = vt.dim(1);
  for (auto ix : indices)
    if (ix < 0 || ix >= v) throw ArgumentError("embedding: index out of range");
  Tensor<Real> out({std::int64_t(indices.size()), d});
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::copy_n(vt.data() + indices[i] * d, d, out.data() + std::int64_t(i) * d);
  return push(std::move(out), requires_grad(table),
              [table, indices, d](Tape& t, Id self) {
                const Tensor<Real>& g = t.grad(self);
                Tensor<Real> gt(t.value(table).shape());
                for (std::size_t i = 0; i < indices.size(); ++i)
                  for (std::int64_t x = 0; x < d; ++x)
                    gt[indices[i] * d + x] += g[std::int64_t(i) * d + x];
                t.accumulate(table, gt);
              },
              "embedding");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::mean_all(Id a) {
  const Tensor<Real>& va = value(a);
  double sum = 0;
  for (std::int64_t i = 0; i < va.numel(); ++i) sum += double(va[i]);
  const std::int64_t n = va.numel();
  Tensor<Real> out = Tensor<Real>::scalar(Real(sum / double(n)));
  return push(std::move(out), requires_grad(a),
              [a, n](Tape& t, Id self) {
                const Real g = t.grad(self)[0] / Real(n);
                Tensor<Real> ga(t.value(a).shape());
                for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] = g;
                t.accumulate(a, ga);
              },
              "mean_all");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::sum_all(Id a) {
  const Tensor<Real>& va = value(a);
  double sum = 0;
  for (std::int64_t i = 0; i < va.numel(); ++i) sum += double(va[i]);
  Tensor<Real> out = Tensor<Real>::scalar(Real(sum));
  return push(std::move(out), requires_grad(a),
              [a](Tape& t, Id self) {
                const Real g = t.grad(self)[0];
                Tensor<Real> ga(t.value(a).shape());
                for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] = g;
                t.accumulate(a, ga);
              },
              "sum_all");
}

template <class Real>
void Tape<Real>::backward(Id root) {
  if (value(root).numel() != 1)
    throw ArgumentError("backward: root must be a scalar");
  if (!nodes_[std::size_t(root)].requires_grad)
    throw ArgumentError("backward: root does not depend on any parameter");
  for (Node& n : nodes_) {
    if (n.grad.numel() != 0)
      std::fill(n.grad.vec().begin(), n.grad.vec().end(), Real(0));
  }
  accumulate(root, Tensor<Real>(value(root).shape(), {Real(1)}));
  for (Id i = root; i >= 0; --i) {
    Node& n = nodes_[std::size_t(i)];
    if (n.backprop && n.grad.numel() != 0) n.backprop(*this, i);
  }
  for (Node& n : nodes_) {
    if (n.requires_grad && n.grad.numel() != 0) check_finite(n.grad, "backward");
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace icodiff
