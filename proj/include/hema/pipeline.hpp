// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hema/image.hpp"
#include "hema/random.hpp"

namespace hema {

enum class PadMode { CenterConstantBlack };
enum class Normalization { ScaleToUnit };

struct PreprocessConfig {
  int target_height = 224;
  int target_width = 224;
  int channels = 3;
  double shear_range = 0.2;
  double zoom_range = 0.2;
  bool horizontal_flip = true;
  double flip_probability = 0.5;
  PadMode pad_mode = PadMode::CenterConstantBlack;
  Normalization normalization = Normalization::ScaleToUnit;

  /// Throws Config when dimensions are non-positive or ranges fall outside [0, 1).
  void validate() const;
};

/// Center-pads to max(H, W) square with zeros. Square inputs come back unchanged.
ImageTensor pad_to_square(const ImageTensor& image);

/// Bilinear resize with half-pixel centres and edge clamping.
ImageTensor resize(const ImageTensor& image, int target_height, int target_width);

/// Divides every sample by 255. Throws State on an already-normalized tensor.
ImageTensor normalize(const ImageTensor& image);

/// Concrete parameters of one random augmentation draw.
struct AugmentParams {
  bool flip = false;
  double shear = 0.0;  // horizontal shear coefficient, x' = x + shear * y
  double zoom = 1.0;   // > 1 magnifies content

  friend bool operator==(const AugmentParams&, const AugmentParams&) = default;
};

/// Draws (flip, shear, zoom) in that order from `rng`.
AugmentParams draw_augment_params(const PreprocessConfig& config, Rng& rng);

/// Horizontal flip, then shear and zoom about the image centre with bilinear
/// sampling and zero fill. Output size equals input size.
ImageTensor apply_augment(const ImageTensor& image, const AugmentParams& params);

/// draw_augment_params + apply_augment. The image must already be at the
/// configured target size (Contract error otherwise).
ImageTensor augment(const ImageTensor& image, const PreprocessConfig& config, Rng& rng);

/// pad -> resize -> normalize.
ImageTensor preprocess_eval(const ImageTensor& decoded, const PreprocessConfig& config);

/// pad -> resize -> augment -> normalize.
ImageTensor preprocess_train(const ImageTensor& decoded, const PreprocessConfig& config, Rng& rng);

}  // namespace hema
