// SPDX-License-Identifier: Apache-2.0
#include "hema/nn/tensor.hpp"

#include <algorithm>

#include "hema/error.hpp"

namespace hema::nn {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + ", " + std::to_string(s.h) + ", " + std::to_string(s.w) + ", " +
         std::to_string(s.c) + ")";
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  if (shape.n < 0 || shape.h < 0 || shape.w < 0 || shape.c < 0) {
    throw Error(ErrorCode::Argument, "negative tensor shape " + to_string(shape));
  }
  data_.assign(shape.size(), fill);
}

Tensor Tensor::reshaped(Shape shape) && {
  if (shape.size() != data_.size()) {
    throw Error(ErrorCode::Contract, "cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  Tensor out;
  out.shape_ = shape;
  out.data_ = std::move(data_);
  return out;
}

Tensor Tensor::slice(int first, int count) const {
  if (first < 0 || count < 0 || first + count > shape_.n) {
    throw Error(ErrorCode::Argument, "batch slice out of range");
  }
  Shape s = shape_;
  s.n = count;
  Tensor out(s);
  std::copy_n(sample(first), s.size(), out.data_.begin());
  return out;
}

Tensor concat_batch(std::span<const Tensor> parts) {
  if (parts.empty()) return {};
  Shape s = parts.front().shape();
  s.n = 0;
  for (const auto& p : parts) {
    if (p.h() != s.h || p.w() != s.w || p.c() != s.c) {
      throw Error(ErrorCode::Contract, "concat_batch: mismatched sample shapes");
    }
    s.n += p.n();
  }
  Tensor out(s);
  auto it = out.data().begin();
  for (const auto& p : parts) it = std::copy(p.data().begin(), p.data().end(), it);
  return out;
}

}  // namespace hema::nn
