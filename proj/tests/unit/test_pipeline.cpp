// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <opencv2/imgcodecs.hpp>

#include "hema/error.hpp"
#include "hema/image.hpp"
#include "hema/pipeline.hpp"
#include "properties.hpp"

namespace hema {
namespace {

ImageTensor constant(int h, int w, float v) { return ImageTensor(h, w, 3, ValueRange::Raw, v); }

ImageTensor gradient(int h, int w) {
  ImageTensor img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>((y * 7 + x * 3 + c * 11) % 256);
    }
  }
  return img;
}

// Reference bilinear sampler: weighted sum over the four neighbours, with
// out-of-range neighbours contributing zero.
double oracle_sample(const ImageTensor& img, double sy, double sx, int c) {
  double acc = 0.0;
  const int y0 = static_cast<int>(std::floor(sy));
  const int x0 = static_cast<int>(std::floor(sx));
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const int y = y0 + dy;
      const int x = x0 + dx;
      const double wgt = (1.0 - std::abs(sy - y)) * (1.0 - std::abs(sx - x));
      if (wgt <= 0.0 || y < 0 || x < 0 || y >= img.height() || x >= img.width()) continue;
      acc += wgt * img.at(y, x, c);
    }
  }
  return acc;
}

TEST(Decode, JpegDimensionsAndRange) {
  const auto jpg = encode(gradient(300, 450), ".jpg");
  const auto img = decode(jpg);
  EXPECT_EQ(img.height(), 300);
  EXPECT_EQ(img.width(), 450);
  EXPECT_EQ(img.channels(), 3);
  EXPECT_EQ(img.range(), ValueRange::Raw);
}

TEST(Decode, GrayscaleIsReplicated) {
  cv::Mat gray(10, 10, CV_8UC1);
  for (int i = 0; i < 100; ++i) gray.data[i] = static_cast<unsigned char>(i * 2);
  std::vector<unsigned char> png;
  ASSERT_TRUE(cv::imencode(".png", gray, png));
  const auto img = decode(std::span<const unsigned char>(png));
  ASSERT_EQ(img.channels(), 3);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      EXPECT_EQ(img.at(y, x, 0), static_cast<float>((y * 10 + x) * 2));
      EXPECT_EQ(img.at(y, x, 1), img.at(y, x, 0));
      EXPECT_EQ(img.at(y, x, 2), img.at(y, x, 0));
    }
  }
}

TEST(Decode, ChannelOrderIsRgb) {
  ImageTensor red(2, 2, 3);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) red.at(y, x, 0) = 255.0f;
  const auto back = decode(encode(red, ".png"));
  EXPECT_EQ(back, red);
}

TEST(Decode, TextIsRejected) {
  try {
    decode(std::string_view("this is not an image"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Decode);
  }
}

TEST(PadToSquare, SquareIsUnchanged) {
  const auto img = gradient(224, 224);
  EXPECT_EQ(pad_to_square(img), img);
}

TEST(PadToSquare, BandsAreBlackInteriorPreserved) {
  const auto img = gradient(100, 200);
  const auto out = pad_to_square(img);
  ASSERT_EQ(out.height(), 200);
  ASSERT_EQ(out.width(), 200);
  for (int y = 0; y < 200; ++y) {
    for (int x = 0; x < 200; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float expected = (y < 50 || y >= 150) ? 0.0f : img.at(y - 50, x, c);
        ASSERT_EQ(out.at(y, x, c), expected) << y << "," << x;
      }
    }
  }
}

TEST(PadToSquare, TallSingleColumn) {
  const auto out = pad_to_square(constant(3, 1, 255.0f));
  ASSERT_EQ(out.height(), 3);
  ASSERT_EQ(out.width(), 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(y, x, c), x == 1 ? 255.0f : 0.0f);
}

TEST(Resize, IdentityAndConstant) {
  const auto img = gradient(224, 224);
  EXPECT_EQ(resize(img, 224, 224), img);
  const auto big = resize(constant(448, 448, 77.0f), 224, 224);
  for (float v : big.data()) ASSERT_FLOAT_EQ(v, 77.0f);
}

TEST(Resize, TwoByTwoCheckerToFourByFour) {
  ImageTensor img(2, 2, 3);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 1, c) = 255.0f;
    img.at(1, 0, c) = 255.0f;
  }
  const auto out = resize(img, 4, 4);
  // Half-pixel centres: output d maps to (d + 0.5) / 2 - 0.5, clamped to [0, 1].
  const double pos[4] = {0.0, 0.25, 0.75, 1.0};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double fy = pos[y];
      const double fx = pos[x];
      const double expected = (1 - fy) * fx * 255.0 + fy * (1 - fx) * 255.0;
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.at(y, x, c), expected, 1e-4) << y << "," << x;
    }
  }
}

TEST(Resize, RejectsNonPositiveTargets) {
  EXPECT_THROW(resize(gradient(4, 4), 0, 4), Error);
  try {
    resize(gradient(4, 4), 4, -1);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
}

TEST(Resize, PreservesValueRange) {
  const auto n = normalize(gradient(10, 10));
  EXPECT_EQ(resize(n, 5, 5).range(), ValueRange::Normalized);
}

TEST(Normalize, Examples) {
  const auto zero = normalize(constant(3, 3, 0.0f));
  const auto full = normalize(constant(3, 3, 255.0f));
  const auto fifth = normalize(constant(3, 3, 51.0f));
  for (float v : zero.data()) EXPECT_EQ(v, 0.0f);
  for (float v : full.data()) EXPECT_EQ(v, 1.0f);
  for (float v : fifth.data()) EXPECT_FLOAT_EQ(v, 0.2f);
  EXPECT_EQ(fifth.range(), ValueRange::Normalized);
  try {
    normalize(normalize(constant(1, 1, 1.0f)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::State);
  }
}

TEST(Augment, IdentityAndFlipInvolution) {
  const auto img = gradient(17, 23);
  EXPECT_EQ(apply_augment(img, {false, 0.0, 1.0}), img);
  const AugmentParams flip{true, 0.0, 1.0};
  const auto once = apply_augment(img, flip);
  EXPECT_NE(once, img);
  EXPECT_EQ(once.at(3, 0, 1), img.at(3, 22, 1));
  EXPECT_EQ(apply_augment(once, flip), img);
}

TEST(Augment, ZoomMagnifiesAboutCentre) {
  const auto img = gradient(21, 21);
  const auto out = apply_augment(img, {false, 0.0, 2.0});
  const double cy = 10.0;
  for (int y = 0; y < 21; ++y) {
    for (int x = 0; x < 21; ++x) {
      const double sy = cy + (y - cy) / 2.0;
      const double sx = cy + (x - cy) / 2.0;
      for (int c = 0; c < 3; ++c) ASSERT_NEAR(out.at(y, x, c), oracle_sample(img, sy, sx, c), 1e-3);
    }
  }
  EXPECT_EQ(out.at(10, 10, 0), img.at(10, 10, 0));
}

TEST(Augment, ZoomOutLeavesBlackBorder) {
  const auto out = apply_augment(constant(20, 20, 200.0f), {false, 0.0, 0.8});
  EXPECT_EQ(out.at(0, 0, 0), 0.0f);
  EXPECT_EQ(out.at(10, 10, 0), 200.0f);
}

TEST(Augment, ShearIsHorizontalAboutCentre) {
  const auto img = gradient(15, 19);
  const double shear = 0.2;
  const auto out = apply_augment(img, {false, shear, 1.0});
  const double cy = 7.0;
  for (int y = 0; y < 15; ++y) {
    for (int x = 0; x < 19; ++x) {
      const double sx = x - shear * (y - cy);
      for (int c = 0; c < 3; ++c) ASSERT_NEAR(out.at(y, x, c), oracle_sample(img, y, sx, c), 1e-3);
    }
  }
  // The centre row does not move.
  for (int x = 0; x < 19; ++x) EXPECT_EQ(out.at(7, x, 2), img.at(7, x, 2));
}

TEST(Augment, DeterministicForFixedState) {
  const PreprocessConfig cfg;
  const auto img = gradient(224, 224);
  Rng a(99), b(99);
  EXPECT_EQ(augment(img, cfg, a), augment(img, cfg, b));
}

TEST(Augment, DrawOrderAndRanges) {
  PreprocessConfig cfg;
  Rng rng(5);
  int flips = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto p = draw_augment_params(cfg, rng);
    flips += p.flip;
    ASSERT_LE(std::abs(p.shear), 0.2);
    ASSERT_GE(p.zoom, 0.8);
    ASSERT_LE(p.zoom, 1.2);
  }
  EXPECT_NEAR(flips / 2000.0, 0.5, 0.05);

  cfg.horizontal_flip = false;
  Rng r1(5), r2(5);
  const auto with = draw_augment_params(PreprocessConfig{}, r1);
  const auto without = draw_augment_params(cfg, r2);
  EXPECT_FALSE(without.flip);
  EXPECT_EQ(with.shear, without.shear);  // the flip draw is consumed either way
}

TEST(Augment, RequiresTargetSize) {
  Rng rng(0);
  try {
    augment(gradient(10, 10), PreprocessConfig{}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Contract);
  }
}

TEST(PreprocessConfig, Validation) {
  EXPECT_NO_THROW(PreprocessConfig{}.validate());
  PreprocessConfig bad;
  bad.shear_range = 1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.target_width = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(PipelineProperties, RandomImages) {
  const auto report = testing::check_pipeline_properties(100, 77);
  EXPECT_EQ(report.cases, 100);
  for (const auto& f : report.failures) ADD_FAILURE() << f;
}

}  // namespace
}  // namespace hema
