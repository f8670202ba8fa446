// SPDX-License-Identifier: Apache-2.0
#include "hema/zoo.hpp"

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "hema/error.hpp"
#include "hema/nn/serialize.hpp"

namespace hema {

using namespace nn;

namespace {

constexpr float kResNetBnEpsilon = 1.001e-5f;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;

template <typename L, typename... Args>
LayerPtr make(Args&&... args) {
  return std::make_unique<L>(std::forward<Args>(args)...);
}

LayerPtr conv(std::string name, int in, int filters, int kernel, int stride, Padding padding, bool bias,
              Activation act = Activation::Linear) {
  return make<Conv2D>(std::move(name), in, Conv2DOptions{filters, kernel, stride, padding, bias, act});
}

// Appends Flatten -> Dense(4, softmax) for a features_h x features_w x channels map.
void add_head(std::vector<LayerPtr>& layers, int features) {
  layers.push_back(make<Flatten>("flatten"));
  layers.push_back(make<Dense>("predictions", features, static_cast<int>(kNumClasses), Activation::Softmax));
}

ModelGraph finish_transfer_model(std::string name, std::vector<LayerPtr> layers, const BackboneInit& init) {
  const std::size_t backbone_layers = layers.size() - 2;
  ModelGraph model(ArchitectureSpec{std::move(name), {1, 224, 224, 3}, static_cast<int>(kNumClasses), true, {}},
                   std::move(layers));
  if (init.source != BackboneInit::Source::Uninitialized) {
    Rng rng(derive_seed(init.seed, {kInitStream}));
    model.initialize(rng);
  }
  if (init.source == BackboneInit::Source::Pretrained) {
    load_backbone(model, backbone_asset_path(init.asset_dir, model.name()));
  }
  model.freeze_before(backbone_layers);
  return model;
}

void mobilenet_separable_block(std::vector<LayerPtr>& layers, int in, int filters, int stride, int id) {
  const std::string b = std::to_string(id);
  if (stride == 1) {
    layers.push_back(make<DepthwiseConv2D>("conv_dw_" + b, in, 3, 1, Padding::Same));
  } else {
    layers.push_back(make<ZeroPadding2D>("conv_pad_" + b, 0, 1, 0, 1));
    layers.push_back(make<DepthwiseConv2D>("conv_dw_" + b, in, 3, stride, Padding::Valid));
  }
  layers.push_back(make<BatchNormalization>("conv_dw_" + b + "_bn", in));
  layers.push_back(make<ReLU>("conv_dw_" + b + "_relu", 6.0f));
  layers.push_back(conv("conv_pw_" + b, in, filters, 1, 1, Padding::Same, false));
  layers.push_back(make<BatchNormalization>("conv_pw_" + b + "_bn", filters));
  layers.push_back(make<ReLU>("conv_pw_" + b + "_relu", 6.0f));
}

LayerPtr resnet_block(const std::string& name, int in, int filters, int stride, bool conv_shortcut) {
  std::vector<LayerPtr> shortcut;
  if (conv_shortcut) {
    shortcut.push_back(conv(name + "_0_conv", in, 4 * filters, 1, stride, Padding::Valid, true));
    shortcut.push_back(make<BatchNormalization>(name + "_0_bn", 4 * filters, kResNetBnEpsilon));
  }
  std::vector<LayerPtr> main;
  main.push_back(conv(name + "_1_conv", in, filters, 1, stride, Padding::Valid, true));
  main.push_back(make<BatchNormalization>(name + "_1_bn", filters, kResNetBnEpsilon));
  main.push_back(make<ReLU>(name + "_1_relu"));
  main.push_back(conv(name + "_2_conv", filters, filters, 3, 1, Padding::Same, true));
  main.push_back(make<BatchNormalization>(name + "_2_bn", filters, kResNetBnEpsilon));
  main.push_back(make<ReLU>(name + "_2_relu"));
  main.push_back(conv(name + "_3_conv", filters, 4 * filters, 1, 1, Padding::Valid, true));
  main.push_back(make<BatchNormalization>(name + "_3_bn", 4 * filters, kResNetBnEpsilon));
  return make<ResidualBlock>(name, std::move(main), std::move(shortcut));
}

}  // namespace

bool is_architecture(std::string_view name) noexcept {
  return std::find(kArchitectures.begin(), kArchitectures.end(), name) != kArchitectures.end();
}

std::filesystem::path backbone_asset_path(const std::filesystem::path& asset_dir, std::string_view arch) {
  return asset_dir / (std::string(arch) + "_backbone.hwts");
}

ModelGraph build_convnet(std::uint64_t seed) {
  std::vector<LayerPtr> layers;
  layers.push_back(conv("conv1", 3, 32, 3, 1, Padding::Same, true, Activation::Relu));
  layers.push_back(make<MaxPooling2D>("pool1", 2, 2));
  layers.push_back(conv("conv2", 32, 64, 3, 1, Padding::Same, true, Activation::Relu));
  layers.push_back(make<MaxPooling2D>("pool2", 2, 2));
  layers.push_back(conv("conv3", 64, 128, 3, 1, Padding::Same, true, Activation::Relu));
  layers.push_back(make<MaxPooling2D>("pool3", 2, 2));
  layers.push_back(conv("conv4", 128, 256, 3, 1, Padding::Same, true, Activation::Relu));
  layers.push_back(make<Dropout>("dropout1", 0.25f));
  layers.push_back(make<Flatten>("flatten"));
  layers.push_back(make<Dropout>("dropout2", 0.5f));
  layers.push_back(make<Dense>("predictions", 28 * 28 * 256, static_cast<int>(kNumClasses), Activation::Softmax));

  ModelGraph model(ArchitectureSpec{"convnet", {1, 224, 224, 3}, static_cast<int>(kNumClasses), false, {}},
                   std::move(layers));
  Rng rng(derive_seed(seed, {kInitStream}));
  model.initialize(rng);
  return model;
}

ModelGraph build_mobilenet_head(const BackboneInit& init) {
  std::vector<LayerPtr> layers;
  layers.push_back(conv("conv1", 3, 32, 3, 2, Padding::Same, false));
  layers.push_back(make<BatchNormalization>("conv1_bn", 32));
  layers.push_back(make<ReLU>("conv1_relu", 6.0f));

  struct Block {
    int filters, stride;
  };
  constexpr std::array<Block, 13> blocks{{{64, 1},
                                          {128, 2},
                                          {128, 1},
                                          {256, 2},
                                          {256, 1},
                                          {512, 2},
                                          {512, 1},
                                          {512, 1},
                                          {512, 1},
                                          {512, 1},
                                          {512, 1},
                                          {1024, 2},
                                          {1024, 1}}};
  int channels = 32;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    mobilenet_separable_block(layers, channels, blocks[i].filters, blocks[i].stride, static_cast<int>(i + 1));
    channels = blocks[i].filters;
  }
  add_head(layers, 7 * 7 * 1024);
  return finish_transfer_model("mobilenet", std::move(layers), init);
}

ModelGraph build_resnet50_head(const BackboneInit& init) {
  std::vector<LayerPtr> layers;
  layers.push_back(make<ZeroPadding2D>("conv1_pad", 3, 3, 3, 3));
  layers.push_back(conv("conv1_conv", 3, 64, 7, 2, Padding::Valid, true));
  layers.push_back(make<BatchNormalization>("conv1_bn", 64, kResNetBnEpsilon));
  layers.push_back(make<ReLU>("conv1_relu"));
  layers.push_back(make<ZeroPadding2D>("pool1_pad", 1, 1, 1, 1));
  layers.push_back(make<MaxPooling2D>("pool1_pool", 3, 2));

  struct Stage {
    int filters, blocks, stride;
  };
  constexpr std::array<Stage, 4> stages{{{64, 3, 1}, {128, 4, 2}, {256, 6, 2}, {512, 3, 2}}};
  int channels = 64;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& st = stages[s];
    const std::string stage = "conv" + std::to_string(s + 2);
    for (int b = 1; b <= st.blocks; ++b) {
      const bool first = b == 1;
      layers.push_back(resnet_block(stage + "_block" + std::to_string(b), channels, st.filters,
                                    first ? st.stride : 1, first));
      channels = 4 * st.filters;
    }
  }
  add_head(layers, 7 * 7 * 2048);
  return finish_transfer_model("resnet50", std::move(layers), init);
}

ModelGraph build_vgg19_head(const BackboneInit& init) {
  std::vector<LayerPtr> layers;
  constexpr std::array<std::pair<int, int>, 5> blocks{{{64, 2}, {128, 2}, {256, 4}, {512, 4}, {512, 4}}};
  int channels = 3;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string block = "block" + std::to_string(b + 1);
    for (int i = 1; i <= blocks[b].second; ++i) {
      layers.push_back(conv(block + "_conv" + std::to_string(i), channels, blocks[b].first, 3, 1, Padding::Same,
                            true, Activation::Relu));
      channels = blocks[b].first;
    }
    layers.push_back(make<MaxPooling2D>(block + "_pool", 2, 2));
  }
  add_head(layers, 7 * 7 * 512);
  return finish_transfer_model("vgg19", std::move(layers), init);
}

ModelGraph build_architecture(std::string_view name, const BackboneInit& init) {
  if (name == "convnet") return build_convnet(init.seed);
  if (name == "mobilenet") return build_mobilenet_head(init);
  if (name == "resnet50") return build_resnet50_head(init);
  if (name == "vgg19") return build_vgg19_head(init);
  throw Error(ErrorCode::Argument, "unknown architecture: " + std::string(name));
}

}  // namespace hema
