// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hema {

enum class ValueRange { Raw, Normalized };

/// Row-major H x W x C image with float samples. Raw tensors hold values in
/// [0, 255]; normalized tensors hold values in [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels, ValueRange range = ValueRange::Raw, float fill = 0.0f);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  ValueRange range() const noexcept { return range_; }
  void set_range(ValueRange range) noexcept { range_ = range; }

  std::size_t size() const noexcept { return data_.size(); }
  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  float& at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  const float& at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  ValueRange range_ = ValueRange::Raw;
  std::vector<float> data_;
};

/// Decodes JPEG/PNG/BMP/... bytes into a raw 3-channel RGB tensor. Grayscale
/// images are replicated across channels and alpha is dropped.
ImageTensor decode(std::span<const unsigned char> bytes);
ImageTensor decode(std::string_view bytes);

/// Encodes a raw tensor (values rounded and clamped to [0, 255]). `format` is
/// a file extension such as ".png" or ".jpg".
std::string encode(const ImageTensor& image, std::string_view format);

}  // namespace hema
