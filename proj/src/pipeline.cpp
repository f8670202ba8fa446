// SPDX-License-Identifier: Apache-2.0
#include "hema/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hema/error.hpp"

namespace hema {

namespace {

// Bilinear sample at (sy, sx) treating out-of-bounds neighbours as zero.
inline float sample_zero_fill(const ImageTensor& img, double sy, double sx, int c) {
  const double fy0 = std::floor(sy);
  const double fx0 = std::floor(sx);
  const int y0 = static_cast<int>(fy0);
  const int x0 = static_cast<int>(fx0);
  const float wy = static_cast<float>(sy - fy0);
  const float wx = static_cast<float>(sx - fx0);
  const int h = img.height();
  const int w = img.width();
  auto px = [&](int y, int x) -> float {
    return (y < 0 || y >= h || x < 0 || x >= w) ? 0.0f : img.at(y, x, c);
  };
  const float p00 = px(y0, x0);
  const float p01 = px(y0, x0 + 1);
  const float p10 = px(y0 + 1, x0);
  const float p11 = px(y0 + 1, x0 + 1);
  const float top = wx == 0.0f ? p00 : p00 + wx * (p01 - p00);
  const float bottom = wx == 0.0f ? p10 : p10 + wx * (p11 - p10);
  return wy == 0.0f ? top : top + wy * (bottom - top);
}

struct AxisTap {
  int lo;
  int hi;
  float frac;
};

std::vector<AxisTap> resize_taps(int in, int out) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int d = 0; d < out; ++d) {
    double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    taps[static_cast<std::size_t>(d)] = {lo, hi, static_cast<float>(src - lo)};
  }
  return taps;
}

}  // namespace

void PreprocessConfig::validate() const {
  if (target_height <= 0 || target_width <= 0 || channels <= 0) {
    throw Error(ErrorCode::Config, "target dimensions must be positive");
  }
  if (!(shear_range >= 0.0 && shear_range < 1.0) || !(zoom_range >= 0.0 && zoom_range < 1.0)) {
    throw Error(ErrorCode::Config, "shear_range and zoom_range must lie in [0, 1)");
  }
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    throw Error(ErrorCode::Config, "flip_probability must lie in [0, 1]");
  }
}

ImageTensor pad_to_square(const ImageTensor& image) {
  const int h = image.height();
  const int w = image.width();
  if (h == w) return image;
  const int side = std::max(h, w);
  const int top = (side - h) / 2;
  const int left = (side - w) / 2;
  ImageTensor out(side, side, image.channels(), image.range(), 0.0f);
  const auto row_len = static_cast<std::size_t>(w) * static_cast<std::size_t>(image.channels());
  for (int y = 0; y < h; ++y) {
    const float* src = &image.at(y, 0, 0);
    float* dst = &out.at(y + top, left, 0);
    std::copy(src, src + row_len, dst);
  }
  return out;
}

ImageTensor resize(const ImageTensor& image, int target_height, int target_width) {
  if (target_height <= 0 || target_width <= 0) {
    throw Error(ErrorCode::Config, "resize target must be positive, got " + std::to_string(target_height) +
                                       "x" + std::to_string(target_width));
  }
  if (image.height() <= 0 || image.width() <= 0) {
    throw Error(ErrorCode::Argument, "cannot resize an empty image");
  }
  if (image.height() == target_height && image.width() == target_width) return image;

  const auto ytaps = resize_taps(image.height(), target_height);
  const auto xtaps = resize_taps(image.width(), target_width);
  const int c = image.channels();
  ImageTensor out(target_height, target_width, c, image.range());
  for (int y = 0; y < target_height; ++y) {
    const auto& ty = ytaps[static_cast<std::size_t>(y)];
    for (int x = 0; x < target_width; ++x) {
      const auto& tx = xtaps[static_cast<std::size_t>(x)];
      for (int k = 0; k < c; ++k) {
        const float p00 = image.at(ty.lo, tx.lo, k);
        const float p01 = image.at(ty.lo, tx.hi, k);
        const float p10 = image.at(ty.hi, tx.lo, k);
        const float p11 = image.at(ty.hi, tx.hi, k);
        const float top = p00 + tx.frac * (p01 - p00);
        const float bottom = p10 + tx.frac * (p11 - p10);
        out.at(y, x, k) = top + ty.frac * (bottom - top);
      }
    }
  }
  return out;
}

ImageTensor normalize(const ImageTensor& image) {
  if (image.range() != ValueRange::Raw) {
    throw Error(ErrorCode::State, "normalize expects a raw tensor; input is already normalized");
  }
  ImageTensor out = image;
  for (float& v : out.data()) v /= 255.0f;
  out.set_range(ValueRange::Normalized);
  return out;
}

AugmentParams draw_augment_params(const PreprocessConfig& config, Rng& rng) {
  AugmentParams p;
  const double u_flip = uniform01(rng);
  p.flip = config.horizontal_flip && u_flip < config.flip_probability;
  p.shear = uniform(rng, -config.shear_range, config.shear_range);
  p.zoom = uniform(rng, 1.0 - config.zoom_range, 1.0 + config.zoom_range);
  return p;
}

ImageTensor apply_augment(const ImageTensor& image, const AugmentParams& params) {
  const int h = image.height();
  const int w = image.width();
  const int c = image.channels();

  ImageTensor flipped = image;
  if (params.flip) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w / 2; ++x) {
        for (int k = 0; k < c; ++k) std::swap(flipped.at(y, x, k), flipped.at(y, w - 1 - x, k));
      }
    }
  }

  // Inverse map from output to source coordinates about the centre:
  // content = zoom * shear * source, so source = shear^-1 * (out / zoom).
  const double cy = (h - 1) / 2.0;
  const double cx = (w - 1) / 2.0;
  ImageTensor out(h, w, c, image.range());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = (y - cy) / params.zoom;
      const double u = (x - cx) / params.zoom;
      const double sy = cy + v;
      const double sx = cx + (u - params.shear * v);
      for (int k = 0; k < c; ++k) out.at(y, x, k) = sample_zero_fill(flipped, sy, sx, k);
    }
  }
  return out;
}

ImageTensor augment(const ImageTensor& image, const PreprocessConfig& config, Rng& rng) {
  if (image.height() != config.target_height || image.width() != config.target_width) {
    throw Error(ErrorCode::Contract, "augment expects an image already resized to the target size");
  }
  return apply_augment(image, draw_augment_params(config, rng));
}

ImageTensor preprocess_eval(const ImageTensor& decoded, const PreprocessConfig& config) {
  return normalize(resize(pad_to_square(decoded), config.target_height, config.target_width));
}

ImageTensor preprocess_train(const ImageTensor& decoded, const PreprocessConfig& config, Rng& rng) {
  const auto sized = resize(pad_to_square(decoded), config.target_height, config.target_width);
  return normalize(augment(sized, config, rng));
}

}  // namespace hema
