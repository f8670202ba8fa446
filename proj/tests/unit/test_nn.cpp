// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "hema/error.hpp"
#include "hema/nn/graph.hpp"
#include "hema/nn/layers.hpp"
#include "hema/nn/serialize.hpp"

namespace hema::nn {
namespace {

Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  for (float& v : t.data()) v = static_cast<float>(uniform(rng, lo, hi));
  return t;
}

void randomize(Layer& layer, Rng& rng) {
  layer.for_each_parameter([&](Parameter& p) {
    for (float& v : p.value) v = static_cast<float>(uniform(rng, -0.5, 0.5));
    if (p.name.ends_with("moving_variance")) {
      for (float& v : p.value) v = static_cast<float>(uniform(rng, 0.5, 2.0));
    }
  });
}

std::map<std::string, Parameter*> params_of(Layer& layer) {
  std::map<std::string, Parameter*> out;
  layer.for_each_parameter([&](Parameter& p) { out[p.name] = &p; });
  return out;
}

float at(const Tensor& t, int n, int y, int x, int c) {
  return t.data()[((static_cast<std::size_t>(n) * t.h() + y) * t.w() + x) * t.c() + c];
}

struct Pad {
  int out, before;
};

// TensorFlow 'same': ceil(in / stride) outputs, the odd padding pixel after.
Pad same_pad(int in, int k, int s) {
  const int out = (in + s - 1) / s;
  const int total = std::max((out - 1) * s + k - in, 0);
  return {out, total / 2};
}

Tensor oracle_conv(const Tensor& x, const Parameter& kernel, const Parameter* bias, int k, int s, Padding padding,
                   int filters) {
  Pad py{(x.h() - k) / s + 1, 0}, px{(x.w() - k) / s + 1, 0};
  if (padding == Padding::Same) {
    py = same_pad(x.h(), k, s);
    px = same_pad(x.w(), k, s);
  }
  Tensor out({x.n(), py.out, px.out, filters});
  for (int n = 0; n < x.n(); ++n)
    for (int oy = 0; oy < py.out; ++oy)
      for (int ox = 0; ox < px.out; ++ox)
        for (int f = 0; f < filters; ++f) {
          double acc = bias ? bias->value[static_cast<std::size_t>(f)] : 0.0;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * s + ky - py.before;
              const int ix = ox * s + kx - px.before;
              if (iy < 0 || ix < 0 || iy >= x.h() || ix >= x.w()) continue;
              for (int c = 0; c < x.c(); ++c) {
                const auto widx = ((static_cast<std::size_t>(ky) * k + kx) * x.c() + c) * filters + f;
                acc += static_cast<double>(at(x, n, iy, ix, c)) * kernel.value[widx];
              }
            }
          out.data()[((static_cast<std::size_t>(n) * py.out + oy) * px.out + ox) * filters + f] =
              static_cast<float>(acc);
        }
  return out;
}

void expect_close(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.data()[i], b.data()[i], tol) << "at " << i;
}

TEST(Conv2D, MatchesDirectConvolution) {
  Rng rng(1);
  struct Case {
    int h, w, cin, filters, k, s;
    Padding pad;
  };
  const Case cases[] = {
      {7, 7, 3, 5, 3, 1, Padding::Same},  {8, 6, 2, 4, 3, 2, Padding::Same}, {9, 9, 3, 2, 3, 2, Padding::Valid},
      {5, 5, 4, 6, 1, 1, Padding::Same},  {6, 7, 3, 3, 1, 2, Padding::Valid}, {10, 10, 2, 3, 5, 1, Padding::Same},
      {4, 4, 8, 16, 1, 1, Padding::Valid}, {224, 224, 3, 2, 3, 2, Padding::Same},
  };
  for (const auto& c : cases) {
    Conv2D conv("c", c.cin, {c.filters, c.k, c.s, c.pad, true, Activation::Linear});
    randomize(conv, rng);
    const auto x = random_tensor({2, c.h, c.w, c.cin}, rng);
    auto p = params_of(conv);
    const auto expected = oracle_conv(x, *p.at("c/kernel"), p.at("c/bias"), c.k, c.s, c.pad, c.filters);
    const auto got = conv.forward(x);
    expect_close(got, expected, 1e-4);
    EXPECT_EQ(conv.output_shape(x.shape()), expected.shape());
  }
}

TEST(Conv2D, FusedReluAndNoBias) {
  Rng rng(2);
  Conv2D conv("c", 3, {4, 3, 1, Padding::Same, false, Activation::Relu});
  randomize(conv, rng);
  auto p = params_of(conv);
  EXPECT_EQ(p.count("c/bias"), 0u);
  EXPECT_EQ(p.at("c/kernel")->shape, (std::vector<int>{3, 3, 3, 4}));
  const auto x = random_tensor({1, 5, 5, 3}, rng);
  auto expected = oracle_conv(x, *p.at("c/kernel"), nullptr, 3, 1, Padding::Same, 4);
  for (float& v : expected.data()) v = std::max(v, 0.0f);
  expect_close(conv.forward(x), expected, 1e-4);
}

TEST(DepthwiseConv2D, MatchesPerChannelConvolution) {
  Rng rng(3);
  for (int s : {1, 2}) {
    DepthwiseConv2D dw("d", 4, 3, s, s == 1 ? Padding::Same : Padding::Valid);
    randomize(dw, rng);
    const auto x = random_tensor({2, 9, 8, 4}, rng);
    const auto& kernel = *params_of(dw).at("d/depthwise_kernel");
    EXPECT_EQ(kernel.shape, (std::vector<int>{3, 3, 4, 1}));
    const auto y = dw.forward(x);
    const Pad py = s == 1 ? same_pad(9, 3, 1) : Pad{(9 - 3) / 2 + 1, 0};
    const Pad px = s == 1 ? same_pad(8, 3, 1) : Pad{(8 - 3) / 2 + 1, 0};
    ASSERT_EQ(y.shape(), (Shape{2, py.out, px.out, 4}));
    for (int n = 0; n < 2; ++n)
      for (int oy = 0; oy < py.out; ++oy)
        for (int ox = 0; ox < px.out; ++ox)
          for (int c = 0; c < 4; ++c) {
            double acc = 0;
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = oy * s + ky - py.before, ix = ox * s + kx - px.before;
                if (iy < 0 || ix < 0 || iy >= 9 || ix >= 8) continue;
                acc += at(x, n, iy, ix, c) * kernel.value[static_cast<std::size_t>((ky * 3 + kx) * 4 + c)];
              }
            ASSERT_NEAR(at(y, n, oy, ox, c), acc, 1e-4);
          }
  }
}

TEST(BatchNormalization, InferenceFormulaAndStatisticsAreFrozen) {
  Rng rng(4);
  BatchNormalization bn("bn", 3, 1.001e-5f);
  randomize(bn, rng);
  auto p = params_of(bn);
  EXPECT_TRUE(p.at("bn/moving_mean")->statistic);
  EXPECT_TRUE(p.at("bn/moving_variance")->statistic);
  EXPECT_FALSE(p.at("bn/gamma")->statistic);
  bn.set_trainable(true);
  EXPECT_FALSE(p.at("bn/moving_mean")->trainable);

  const auto x = random_tensor({2, 3, 3, 3}, rng);
  const auto y = bn.forward(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto c = i % 3;
    const double expected = p.at("bn/gamma")->value[c] * (x.data()[i] - p.at("bn/moving_mean")->value[c]) /
                                std::sqrt(p.at("bn/moving_variance")->value[c] + 1.001e-5) +
                            p.at("bn/beta")->value[c];
    ASSERT_NEAR(y.data()[i], expected, 1e-5);
  }
}

TEST(ReLU, PlainAndCapped) {
  Tensor x({1, 1, 1, 5});
  const float in[] = {-2.0f, 0.0f, 3.0f, 6.0f, 9.0f};
  std::copy(std::begin(in), std::end(in), x.data().begin());
  const auto plain = ReLU("r").forward(x);
  const auto six = ReLU("r6", 6.0f).forward(x);
  const float want_plain[] = {0, 0, 3, 6, 9};
  const float want_six[] = {0, 0, 3, 6, 6};
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(plain.data()[static_cast<std::size_t>(i)], want_plain[i]);
    EXPECT_EQ(six.data()[static_cast<std::size_t>(i)], want_six[i]);
  }
}

TEST(MaxPooling2D, MatchesWindowMaximum) {
  Rng rng(5);
  const auto x = random_tensor({2, 7, 6, 3}, rng);
  const auto y = MaxPooling2D("p", 2, 2).forward(x);
  ASSERT_EQ(y.shape(), (Shape{2, 3, 3, 3}));
  for (int n = 0; n < 2; ++n)
    for (int oy = 0; oy < 3; ++oy)
      for (int ox = 0; ox < 3; ++ox)
        for (int c = 0; c < 3; ++c) {
          float m = -1e30f;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) m = std::max(m, at(x, n, oy * 2 + dy, ox * 2 + dx, c));
          ASSERT_EQ(at(y, n, oy, ox, c), m);
        }
}

TEST(ZeroPadding2D, PadsAsymmetrically) {
  Rng rng(6);
  const auto x = random_tensor({1, 2, 3, 2}, rng);
  const auto y = ZeroPadding2D("z", 0, 1, 0, 1).forward(x);
  ASSERT_EQ(y.shape(), (Shape{1, 3, 4, 2}));
  for (int yy = 0; yy < 3; ++yy)
    for (int xx = 0; xx < 4; ++xx)
      for (int c = 0; c < 2; ++c) {
        const float expected = (yy < 2 && xx < 3) ? at(x, 0, yy, xx, c) : 0.0f;
        ASSERT_EQ(at(y, 0, yy, xx, c), expected);
      }
}

TEST(Dropout, InferenceIdentityAndInvertedScaling) {
  Rng rng(7);
  Dropout drop("d", 0.25f);
  const Tensor ones({1, 1, 1, 20000}, 1.0f);
  EXPECT_EQ(drop.forward(ones), ones);
  TrainContext ctx{&rng};
  const auto y = drop.forward_train(ones, ctx);
  double mean = 0;
  std::size_t zeros = 0;
  for (float v : y.data()) {
    mean += v;
    if (v == 0.0f) ++zeros;
    else ASSERT_FLOAT_EQ(v, 1.0f / 0.75f);
  }
  EXPECT_NEAR(mean / 20000.0, 1.0, 0.03);
  EXPECT_NEAR(static_cast<double>(zeros) / 20000.0, 0.25, 0.02);
  const auto g = drop.backward(ones, true);
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(g.data()[i], y.data()[i]);
}

TEST(Dense, ForwardIsAffineAndDescribed) {
  Rng rng(8);
  Dense d("predictions", 6, 4, Activation::Softmax);
  randomize(d, rng);
  const auto x = random_tensor({3, 1, 1, 6}, rng);
  const auto y = d.forward(x);
  ASSERT_EQ(y.shape(), (Shape{3, 1, 1, 4}));
  for (int n = 0; n < 3; ++n)
    for (int u = 0; u < 4; ++u) {
      double acc = d.bias().value[static_cast<std::size_t>(u)];
      for (int f = 0; f < 6; ++f) acc += at(x, n, 0, 0, f) * d.kernel().value[static_cast<std::size_t>(f * 4 + u)];
      ASSERT_NEAR(at(y, n, 0, 0, u), acc, 1e-5);
    }
  std::vector<LayerInfo> info;
  d.describe({1, 1, 1, 6}, info);
  ASSERT_EQ(info.size(), 1u);
  EXPECT_EQ(info[0].params, 28u);
}

TEST(ResidualBlock, AddsShortcutThenRelu) {
  Rng rng(9);
  std::vector<LayerPtr> main, shortcut;
  main.push_back(std::make_unique<Conv2D>("m", 3, Conv2DOptions{3, 3, 1, Padding::Same, true, Activation::Linear}));
  ResidualBlock identity("blk", std::move(main), std::move(shortcut));
  randomize(identity, rng);
  const auto x = random_tensor({1, 4, 4, 3}, rng);
  auto p = params_of(identity);
  const auto conv = oracle_conv(x, *p.at("m/kernel"), p.at("m/bias"), 3, 1, Padding::Same, 3);
  const auto y = identity.forward(x);
  for (std::size_t i = 0; i < y.size(); ++i) {
    ASSERT_NEAR(y.data()[i], std::max(0.0f, conv.data()[i] + x.data()[i]), 1e-5);
  }
  std::vector<LayerInfo> info;
  identity.describe(x.shape(), info);
  ASSERT_EQ(info.size(), 3u);
  EXPECT_EQ(info[1].kind, "Add");
  EXPECT_EQ(info[2].kind, "ReLU");
}

ModelGraph tiny_graph(std::uint64_t seed, bool with_dropout = false) {
  std::vector<LayerPtr> layers;
  layers.push_back(std::make_unique<Conv2D>("conv1", 3, Conv2DOptions{4, 3, 1, Padding::Same, true, Activation::Relu}));
  layers.push_back(std::make_unique<ZeroPadding2D>("pad", 0, 1, 0, 1));
  layers.push_back(std::make_unique<Conv2D>("conv2", 4, Conv2DOptions{5, 3, 2, Padding::Valid, true, Activation::Linear}));
  layers.push_back(std::make_unique<ReLU>("relu2"));
  layers.push_back(std::make_unique<MaxPooling2D>("pool", 2, 2));
  if (with_dropout) layers.push_back(std::make_unique<Dropout>("drop", 0.5f));
  layers.push_back(std::make_unique<Flatten>("flatten"));
  layers.push_back(std::make_unique<Dense>("predictions", 2 * 2 * 5, 4, Activation::Softmax));
  ModelGraph g({"tiny", {1, 9, 9, 3}, 4, false, {}}, std::move(layers));
  Rng rng(seed);
  g.initialize(rng);
  return g;
}

double loss_of(ModelGraph& g, const Tensor& x, const std::vector<int>& labels) {
  Rng rng(0);
  TrainContext ctx{&rng};
  return softmax_cross_entropy(g.forward_train(x, ctx), labels).loss;
}

TEST(Backprop, AllTrainableParametersMatchFiniteDifferences) {
  auto g = tiny_graph(11);
  Rng rng(12);
  const auto x = random_tensor({3, 9, 9, 3}, rng, 0.0, 1.0);
  const std::vector<int> labels{0, 2, 3};

  g.zero_grad();
  Rng drop(0);
  TrainContext ctx{&drop};
  const auto res = softmax_cross_entropy(g.forward_train(x, ctx), labels);
  g.backward(res.grad_logits);

  int checked = 0;
  g.for_each_parameter([&](Parameter& p) {
    for (std::size_t k = 0; k < p.size(); k += std::max<std::size_t>(1, p.size() / 7)) {
      const float orig = p.value[k];
      const float h = 1e-3f;
      p.value[k] = orig + h;
      const double up = loss_of(g, x, labels);
      p.value[k] = orig - h;
      const double down = loss_of(g, x, labels);
      p.value[k] = orig;
      const double numeric = (up - down) / (2.0 * h);
      EXPECT_NEAR(p.grad[k], numeric, 2e-3 + 3e-2 * std::abs(numeric)) << p.name << "[" << k << "]";
      ++checked;
    }
  });
  EXPECT_GT(checked, 20);
}

TEST(Backprop, FrozenPrefixGetsNoGradient) {
  auto g = tiny_graph(13);
  g.freeze_before(g.num_layers() - 2);
  EXPECT_EQ(g.first_trainable_layer(), g.num_layers() - 1);
  Rng rng(14);
  const auto x = random_tensor({2, 9, 9, 3}, rng, 0.0, 1.0);
  Rng drop(0);
  TrainContext ctx{&drop};
  g.zero_grad();
  const auto res = softmax_cross_entropy(g.forward_train(x, ctx), std::vector<int>{1, 2});
  g.backward(res.grad_logits);
  g.for_each_parameter([&](const Parameter& p) {
    if (p.name.starts_with("predictions")) {
      EXPECT_TRUE(p.trainable);
    } else {
      EXPECT_FALSE(p.trainable) << p.name;
      for (float v : p.grad) ASSERT_EQ(v, 0.0f);
    }
  });
  const auto audit = g.audit();
  EXPECT_EQ(audit.trainable, 20u * 4u + 4u);
  EXPECT_EQ(audit.total, audit.trainable + audit.frozen);
}

TEST(Graph, TrainForwardWithoutDropoutMatchesInference) {
  auto g = tiny_graph(15, true);
  Rng rng(16);
  const auto x = random_tensor({10, 9, 9, 3}, rng, 0.0, 1.0);
  const auto inference = g.logits(x);
  EXPECT_EQ(inference.shape(), (Shape{10, 1, 1, 4}));
  // Micro-batching is invisible to callers.
  expect_close(g.logits(x.slice(9, 1)), inference.slice(9, 1), 1e-5);
  EXPECT_THROW(g.logits(Tensor({1, 8, 8, 3})), Error);
}

TEST(Graph, HeadMustBeSoftmaxDenseOverFourClasses) {
  std::vector<LayerPtr> layers;
  layers.push_back(std::make_unique<Flatten>("flatten"));
  layers.push_back(std::make_unique<Dense>("predictions", 12, 4, Activation::Linear));
  EXPECT_THROW(ModelGraph({"bad", {1, 2, 2, 3}, 4, false, {}}, std::move(layers)), Error);
}

TEST(Softmax, RowsSumToOneAndAreStable) {
  Tensor logits({3, 1, 1, 4});
  const float v[] = {1, 2, 3, 4, 1000, 1000, -1000, 0, -5, -5, -5, -5};
  std::copy(std::begin(v), std::end(v), logits.data().begin());
  const auto rows = softmax_rows(logits);
  for (const auto& r : rows) {
    double s = 0;
    for (float p : r) {
      ASSERT_TRUE(std::isfinite(p));
      s += p;
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0) + std::exp(4.0);
  EXPECT_NEAR(rows[0][3], std::exp(4.0) / z, 1e-6);
  EXPECT_NEAR(rows[1][0], 0.5, 1e-6);
  EXPECT_NEAR(rows[2][2], 0.25, 1e-6);
}

TEST(Softmax, ArgmaxTiesGoToLowestIndex) {
  EXPECT_EQ(argmax({0.25f, 0.25f, 0.25f, 0.25f}), 0);
  EXPECT_EQ(argmax({0.1f, 0.4f, 0.4f, 0.1f}), 1);
  EXPECT_EQ(argmax({0.1f, 0.2f, 0.3f, 0.4f}), 3);
}

TEST(CrossEntropy, ValueAndGradientMatchClosedForm) {
  Tensor logits({2, 1, 1, 4});
  const float v[] = {0.5f, -1.0f, 2.0f, 0.0f, 3.0f, 3.0f, 3.0f, 3.0f};
  std::copy(std::begin(v), std::end(v), logits.data().begin());
  const std::vector<int> labels{2, 1};
  const auto res = softmax_cross_entropy(logits, labels);
  const auto rows = softmax_rows(logits);
  const double expected = (-std::log(rows[0][2]) - std::log(0.25)) / 2.0;
  EXPECT_NEAR(res.loss, expected, 1e-6);
  EXPECT_EQ(res.correct, 1u);  // row 2 ties resolve to class 0
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 4; ++k) {
      const double y = labels[static_cast<std::size_t>(n)] == k ? 1.0 : 0.0;
      EXPECT_NEAR(at(res.grad_logits, n, 0, 0, k), (rows[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] - y) / 2.0, 1e-6);
    }

  const std::vector<float> w{1.0f, 3.0f, 0.5f, 1.0f};
  const auto weighted = softmax_cross_entropy(logits, labels, w);
  EXPECT_NEAR(weighted.loss, (-0.5 * std::log(rows[0][2]) - 3.0 * std::log(0.25)) / 2.0, 1e-6);
}

TEST(Adam, FirstStepsFollowTheReferenceUpdate) {
  auto g = tiny_graph(17);
  g.freeze_before(g.num_layers() - 1);
  auto& k = g.head().kernel();
  const nn::FloatBuffer start = k.value;
  Adam opt(0.01);
  double m = 0, v = 0, w = start[0];
  for (int t = 1; t <= 3; ++t) {
    g.zero_grad();
    const float grad = 0.3f * static_cast<float>(t) - 0.5f;
    std::fill(k.grad.begin(), k.grad.end(), grad);
    opt.step(g);
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    const double alpha = 0.01 * std::sqrt(1 - std::pow(0.999, t)) / (1 - std::pow(0.9, t));
    w -= alpha * m / (std::sqrt(v) + 1e-7);
    EXPECT_NEAR(k.value[0], w, 1e-6);
  }
  EXPECT_EQ(opt.iterations(), 3);
}

TEST(Serialize, RoundTripIsBitExact) {
  auto a = tiny_graph(18);
  auto b = tiny_graph(19);
  const auto bytes = serialize_weights(a);
  deserialize_weights(b, bytes);
  EXPECT_EQ(serialize_weights(b), bytes);
  Rng rng(20);
  const auto x = random_tensor({2, 9, 9, 3}, rng);
  EXPECT_EQ(a.logits(x), b.logits(x));
}

TEST(Serialize, CorruptionIsDetected) {
  auto a = tiny_graph(21);
  auto bytes = serialize_weights(a);
  auto expect_integrity = [&](const std::string& data) {
    auto b = tiny_graph(22);
    try {
      deserialize_weights(b, data);
      ADD_FAILURE() << "accepted corrupt weights";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Integrity);
    }
  };
  expect_integrity(bytes.substr(0, bytes.size() - 3));
  expect_integrity("NOTHEMA!" + bytes.substr(8));
  expect_integrity(bytes + "x");

  auto arrays = decode_arrays(bytes);
  arrays.arrays.pop_back();
  expect_integrity(encode_arrays(arrays.tag, arrays.arrays));
  auto other = decode_arrays(bytes);
  expect_integrity(encode_arrays("convnet", other.arrays));
}

}  // namespace
}  // namespace hema::nn
