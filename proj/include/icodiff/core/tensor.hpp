// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "icodiff/errors.hpp"

namespace icodiff {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s);

// Dense row-major tensor with value semantics. Rank 0 is a scalar.
template <class Real>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    for (auto d : shape_)
      if (d <= 0) throw ArgumentError("tensor: non-positive dimension in " + shape_str(shape_));
    data_.assign(std::size_t(shape_numel(shape_)), Real(0));
  }
  Tensor(Shape shape, std::vector<Real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (std::int64_t(data_.size()) != shape_numel(shape_))
      throw ArgumentError("tensor: data length does not match shape " + shape_str(shape_));
  }

  static Tensor scalar(Real v) { return Tensor({}, {v}); }

  const Shape& shape() const { return shape_; }
  int rank() const { return int(shape_.size()); }
  std::int64_t numel() const { return std::int64_t(data_.size()); }
  std::int64_t dim(int i) const { return shape_[std::size_t(i)]; }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::vector<Real>& vec() { return data_; }
  const std::vector<Real>& vec() const { return data_; }

  Real& operator[](std::int64_t i) { return data_[std::size_t(i)]; }
  Real operator[](std::int64_t i) const { return data_[std::size_t(i)]; }

  Real& at(std::int64_t i, std::int64_t j) { return data_[std::size_t(i * shape_[1] + j)]; }
  Real at(std::int64_t i, std::int64_t j) const { return data_[std::size_t(i * shape_[1] + j)]; }
  Real& at(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data_[std::size_t((i * shape_[1] + j) * shape_[2] + k)];
  }
  Real at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[std::size_t((i * shape_[1] + j) * shape_[2] + k)];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  template <class Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = Other(data_[i]);
    return Tensor<Other>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::vector<Real> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace icodiff
