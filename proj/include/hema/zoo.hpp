// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>

#include "hema/nn/graph.hpp"

namespace hema {

/// Architecture names in training order.
inline constexpr std::array<std::string_view, 4> kArchitectures{"convnet", "mobilenet", "resnet50", "vgg19"};

bool is_architecture(std::string_view name) noexcept;

/// Where the frozen backbone weights come from.
struct BackboneInit {
  enum class Source { Pretrained, Random, Uninitialized };

  Source source = Source::Pretrained;
  std::filesystem::path asset_dir;
  std::uint64_t seed = 0;  // also seeds the classifier head

  /// ImageNet weights from `<asset_dir>/<arch>_backbone.hwts`.
  static BackboneInit pretrained(std::filesystem::path asset_dir, std::uint64_t head_seed = 0) {
    return {Source::Pretrained, std::move(asset_dir), head_seed};
  }
  /// Glorot-initialized backbone; for tests and pipeline smoke runs only.
  static BackboneInit random(std::uint64_t seed) { return {Source::Random, {}, seed}; }
  /// Structure only; used when all weights are loaded immediately afterwards.
  static BackboneInit uninitialized() { return {Source::Uninitialized, {}, 0}; }
};

std::filesystem::path backbone_asset_path(const std::filesystem::path& asset_dir, std::string_view arch);

/// 4 x Conv(3x3, same, ReLU) with 32/64/128/256 filters, three 2x2 max-pools,
/// Dropout(0.25), Flatten, Dropout(0.5), Dense(4, softmax). Fully trainable.
nn::ModelGraph build_convnet(std::uint64_t seed = 0);

/// Depthwise-separable backbone (stride-2 stem + 13 separable blocks,
/// ReLU6, 7x7x1024 features), frozen, with a Flatten -> Dense(4) head.
nn::ModelGraph build_mobilenet_head(const BackboneInit& init);

/// 50-layer bottleneck residual backbone (7x7x2048 features), frozen.
nn::ModelGraph build_resnet50_head(const BackboneInit& init);

/// 16 conv + 5 max-pool backbone (7x7x512 features), frozen.
nn::ModelGraph build_vgg19_head(const BackboneInit& init);

/// Dispatch by name; throws Argument for unknown names.
nn::ModelGraph build_architecture(std::string_view name, const BackboneInit& init);

}  // namespace hema
