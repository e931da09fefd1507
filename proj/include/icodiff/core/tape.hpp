// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "icodiff/core/tensor.hpp"

namespace icodiff {

// Reverse-mode tape. Ops append nodes in execution order, so reverse index
// order is a valid reverse-topological order for the backward sweep.
// Every public op validates shapes and checks its output for non-finite
// values. One tape is single-threaded by contract; independent tapes are
// independent.
template <class Real>
class Tape {
 public:
  using Id = std::int32_t;

  Id leaf(Tensor<Real> value, bool requires_grad = false);

  // Elementwise binary. `add`/`mul` also accept b whose shape is a trailing
  // suffix of a's (bias rows, scalars); the gradient reduces over the
  // broadcast leading axes.
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);

  Id add_scalar(Id a, Real c);
  Id mul_scalar(Id a, Real c);

  Id matmul(Id a, Id b);  // (m,k) x (k,n)
  Id bmm(Id a, Id b);     // (B,m,k) x (B,k,n)

  Id permute(Id a, const std::vector<int>& axes);
  Id reshape(Id a, Shape shape);
  Id concat(const std::vector<Id>& parts, int axis);
  Id slice(Id a, int axis, std::int64_t start, std::int64_t len);
  // (B,D) -> (B,T,D); gradient sums over the inserted axis.
  Id expand_middle(Id a, std::int64_t t);

  Id tanh_(Id a);
  Id gelu(Id a);  // tanh approximation
  Id exp_(Id a);
  Id log_(Id a);
  Id sqrt_(Id a);
  Id sigmoid(Id a);

  Id softmax(Id a);  // over the last axis
  // Layer normalization over the last axis, eps inside the sqrt.
  Id layernorm(Id x, Id gamma, Id beta);
  Id layernorm(Id x);  // without affine
  Id embedding(Id table, std::vector<std::int64_t> indices);

  Id mean_all(Id a);
  Id sum_all(Id a);

  // Runs the backward sweep from a scalar root. Gradients of leaves that do
  // not influence the root stay zero.
  void backward(Id root);

  const Tensor<Real>& value(Id id) const { return nodes_[std::size_t(id)].value; }
  const Tensor<Real>& grad(Id id) const;
  bool requires_grad(Id id) const { return nodes_[std::size_t(id)].requires_grad; }

  std::size_t size() const { return nodes_.size(); }
  void clear();

  static constexpr Real layernorm_eps = Real(1e-5);

 private:
  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;
    std::function<void(Tape&, Id)> backprop;  // empty for leaves
    bool requires_grad = false;
    std::vector<Real> saved;  // op-specific stash (layernorm statistics)
  };

  Id push(Tensor<Real> value, bool requires_grad,
          std::function<void(Tape&, Id)> backprop, const char* opname);
  void accumulate(Id id, const Tensor<Real>& g);
  // Adds g (shaped like the broadcast output) into the gradient of a
  // suffix-broadcast operand.
  void accumulate_reduced(Id id, const Tensor<Real>& g);

  std::vector<Node> nodes_;

  friend struct TapeTestPeer;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace icodiff
