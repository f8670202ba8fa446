// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hema::nn {

/// Float storage with a fixed SIMD alignment. Vectorized reductions peel
/// a scalar prologue up to the first aligned element, so a buffer's address
/// would otherwise leak into the summation order and break run-to-run
/// reproducibility.
using FloatBuffer = std::vector<float, Eigen::aligned_allocator<float>>;

/// Batch-major NHWC float tensor. Dense activations use H = W = 1.
struct Shape {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t sample_size() const noexcept {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c);
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n) * sample_size(); }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);

  const Shape& shape() const noexcept { return shape_; }
  int n() const noexcept { return shape_.n; }
  int h() const noexcept { return shape_.h; }
  int w() const noexcept { return shape_.w; }
  int c() const noexcept { return shape_.c; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float* sample(int i) noexcept { return data_.data() + static_cast<std::size_t>(i) * shape_.sample_size(); }
  const float* sample(int i) const noexcept {
    return data_.data() + static_cast<std::size_t>(i) * shape_.sample_size();
  }

  /// Same data, new shape with an equal element count.
  Tensor reshaped(Shape shape) &&;

  /// Copy of samples [first, first + count).
  Tensor slice(int first, int count) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  FloatBuffer data_;
};

/// Concatenates along the batch axis; all parts must share H, W, C.
Tensor concat_batch(std::span<const Tensor> parts);

}  // namespace hema::nn
