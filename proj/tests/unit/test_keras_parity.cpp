// SPDX-License-Identifier: Apache-2.0
// Compares each frozen backbone against Keras on randomized weights. The
// fixture files come from tools/export_keras_backbone.py (see tests/CMakeLists.txt);
// the test skips when they are absent.
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "hema/io.hpp"
#include "hema/nn/serialize.hpp"
#include "hema/zoo.hpp"

namespace hema {
namespace {

namespace fs = std::filesystem;

fs::path parity_dir() {
  const char* dir = std::getenv("HEMA_PARITY_DIR");
  return dir ? fs::path(dir) : fs::path();
}

class KerasParity : public ::testing::TestWithParam<std::string> {};

TEST_P(KerasParity, BackboneFeaturesMatch) {
  const std::string arch = GetParam();
  const auto dir = parity_dir();
  const auto ref_path = dir / (arch + "_reference.hwts");
  if (dir.empty() || !fs::exists(ref_path) || !fs::exists(backbone_asset_path(dir, arch))) {
    GTEST_SKIP() << "no Keras reference for " << arch;
  }

  const auto model = build_architecture(arch, BackboneInit::pretrained(dir));
  const auto ref = nn::decode_arrays(read_file(ref_path));
  ASSERT_EQ(ref.arrays.size(), 2u);
  const auto& input = ref.arrays[0];
  const auto& features = ref.arrays[1];
  ASSERT_EQ(input.shape.size(), 4u);

  nn::Tensor x({input.shape[0], input.shape[1], input.shape[2], input.shape[3]});
  std::copy(input.values.begin(), input.values.end(), x.data().begin());
  // Everything before Flatten + Dense is the backbone.
  for (std::size_t i = 0; i + 2 < model.num_layers(); ++i) x = model.layer(i).forward(x);

  ASSERT_EQ(x.size(), features.values.size());
  EXPECT_EQ(x.h(), features.shape[1]);
  EXPECT_EQ(x.c(), features.shape[3]);
  double max_ref = 0.0, max_diff = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    max_ref = std::max(max_ref, std::abs(static_cast<double>(features.values[i])));
    max_diff = std::max(max_diff, std::abs(static_cast<double>(x.data()[i]) - features.values[i]));
  }
  ASSERT_GT(max_ref, 0.0);
  EXPECT_LE(max_diff / max_ref, 1e-3) << arch << " max |diff| " << max_diff << " vs max |ref| " << max_ref;
}

INSTANTIATE_TEST_SUITE_P(Backbones, KerasParity, ::testing::Values("mobilenet", "resnet50", "vgg19"));

}  // namespace
}  // namespace hema
