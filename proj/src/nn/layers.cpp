// SPDX-License-Identifier: Apache-2.0
#include "hema/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include <Eigen/Core>

#include "hema/error.hpp"

namespace hema::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<float, 1, Eigen::Dynamic>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

[[noreturn]] void shape_error(const std::string& layer, const std::string& what) {
  throw Error(ErrorCode::Contract, layer + ": " + what);
}

void glorot_uniform(Parameter& p, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (float& v : p.value) v = static_cast<float>(uniform(rng, -limit, limit));
}

void fill(Parameter& p, float v) { std::fill(p.value.begin(), p.value.end(), v); }

struct ConvGeometry {
  int in_h, in_w, in_c;
  int out_h, out_w;
  int kernel, stride;
  int pad_top, pad_left;
};

// Rows are output positions, columns (ky, kx, c) patches; matches HWIO kernels.
void im2col(const float* x, const ConvGeometry& g, float* cols) {
  const std::size_t row_len = static_cast<std::size_t>(g.kernel) * g.kernel * g.in_c;
  const std::size_t cbytes = static_cast<std::size_t>(g.in_c) * sizeof(float);
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      float* row = cols + (static_cast<std::size_t>(oy) * g.out_w + ox) * row_len;
      for (int ky = 0; ky < g.kernel; ++ky) {
        const int iy = oy * g.stride - g.pad_top + ky;
        for (int kx = 0; kx < g.kernel; ++kx) {
          const int ix = ox * g.stride - g.pad_left + kx;
          float* dst = row + (static_cast<std::size_t>(ky) * g.kernel + kx) * g.in_c;
          if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) {
            std::memset(dst, 0, cbytes);
          } else {
            std::memcpy(dst, x + (static_cast<std::size_t>(iy) * g.in_w + ix) * g.in_c, cbytes);
          }
        }
      }
    }
  }
}

void col2im_add(const float* cols, const ConvGeometry& g, float* dx) {
  const std::size_t row_len = static_cast<std::size_t>(g.kernel) * g.kernel * g.in_c;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const float* row = cols + (static_cast<std::size_t>(oy) * g.out_w + ox) * row_len;
      for (int ky = 0; ky < g.kernel; ++ky) {
        const int iy = oy * g.stride - g.pad_top + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < g.kernel; ++kx) {
          const int ix = ox * g.stride - g.pad_left + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          const float* src = row + (static_cast<std::size_t>(ky) * g.kernel + kx) * g.in_c;
          float* dst = dx + (static_cast<std::size_t>(iy) * g.in_w + ix) * g.in_c;
          for (int c = 0; c < g.in_c; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

// Output size and leading pad for one spatial axis.
std::pair<int, int> conv_axis(int in, int kernel, int stride, Padding padding) {
  if (padding == Padding::Same) {
    const int out = (in + stride - 1) / stride;
    const int total = std::max((out - 1) * stride + kernel - in, 0);
    return {out, total / 2};
  }
  if (in < kernel) return {0, 0};
  return {(in - kernel) / stride + 1, 0};
}

}  // namespace

// Layer ---------------------------------------------------------------------

Tensor Layer::backward(const Tensor&, bool) {
  throw Error(ErrorCode::Contract, "layer " + name_ + " (" + std::string(kind()) + ") does not support backward");
}

void Layer::for_each_parameter(const std::function<void(Parameter&)>& fn) {
  for (auto& p : params_) fn(p);
}

void Layer::for_each_parameter(const std::function<void(const Parameter&)>& fn) const {
  for (const auto& p : params_) fn(p);
}

void Layer::describe(const Shape& in, std::vector<LayerInfo>& out) const {
  out.push_back({name_, std::string(kind()), output_shape(in), own_parameter_count()});
}

void Layer::set_trainable(bool trainable) {
  for_each_parameter([trainable](Parameter& p) {
    if (!p.statistic) p.trainable = trainable;
  });
}

Parameter& Layer::add_parameter(std::string weight, std::vector<int> shape, bool statistic) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  Parameter p;
  p.name = name_ + "/" + weight;
  p.shape = std::move(shape);
  p.value.assign(n, 0.0f);
  p.trainable = !statistic;
  p.statistic = statistic;
  params_.push_back(std::move(p));
  return params_.back();
}

std::size_t Layer::own_parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

// Conv2D --------------------------------------------------------------------

Conv2D::Conv2D(std::string name, int in_channels, Conv2DOptions opts)
    : Layer(std::move(name)), in_channels_(in_channels), opts_(opts) {
  if (opts.filters <= 0 || opts.kernel <= 0 || opts.stride <= 0 || in_channels <= 0) {
    shape_error(this->name(), "invalid convolution configuration");
  }
  if (opts.activation == Activation::Softmax) shape_error(this->name(), "softmax is not a conv activation");
  params_.reserve(2);
  add_parameter("kernel", {opts.kernel, opts.kernel, in_channels, opts.filters});
  if (opts.use_bias) add_parameter("bias", {opts.filters});
}

Conv2D::Geometry Conv2D::geometry(const Shape& in) const {
  if (in.c != in_channels_) {
    shape_error(name(), "expected " + std::to_string(in_channels_) + " channels, got " + to_string(in));
  }
  const auto [oh, pt] = conv_axis(in.h, opts_.kernel, opts_.stride, opts_.padding);
  const auto [ow, pl] = conv_axis(in.w, opts_.kernel, opts_.stride, opts_.padding);
  if (oh <= 0 || ow <= 0) shape_error(name(), "input " + to_string(in) + " smaller than kernel");
  return {oh, ow, pt, pl};
}

Shape Conv2D::output_shape(const Shape& in) const {
  const auto g = geometry(in);
  return {in.n, g.out_h, g.out_w, opts_.filters};
}

Tensor Conv2D::forward(const Tensor& x) const {
  const Shape in = x.shape();
  const auto g = geometry(in);
  const ConvGeometry cg{in.h, in.w, in.c, g.out_h, g.out_w, opts_.kernel, opts_.stride, g.pad_top, g.pad_left};
  Tensor y({in.n, g.out_h, g.out_w, opts_.filters});

  const int K = opts_.kernel * opts_.kernel * in.c;
  const int P = g.out_h * g.out_w;
  const bool direct = opts_.kernel == 1 && opts_.stride == 1;
  FloatBuffer cols(direct ? 0 : static_cast<std::size_t>(P) * K);

  ConstMap W(params_[0].value.data(), K, opts_.filters);
  for (int i = 0; i < in.n; ++i) {
    const float* patches = x.sample(i);
    if (!direct) {
      im2col(x.sample(i), cg, cols.data());
      patches = cols.data();
    }
    MutMap out(y.sample(i), P, opts_.filters);
    out.noalias() = ConstMap(patches, P, K) * W;
    if (opts_.use_bias) {
      out.rowwise() += Eigen::Map<const RowVec>(params_[1].value.data(), opts_.filters);
    }
    if (opts_.activation == Activation::Relu) out = out.cwiseMax(0.0f);
  }
  return y;
}

Tensor Conv2D::forward_train(const Tensor& x, TrainContext&) {
  cached_input_ = x;
  Tensor y = forward(x);
  if (opts_.activation == Activation::Relu) cached_output_ = y;
  return y;
}

Tensor Conv2D::backward(const Tensor& grad_out, bool need_input_grad) {
  const Shape in = cached_input_.shape();
  const auto g = geometry(in);
  if (grad_out.shape() != Shape{in.n, g.out_h, g.out_w, opts_.filters}) {
    shape_error(name(), "gradient shape mismatch");
  }
  const ConvGeometry cg{in.h, in.w, in.c, g.out_h, g.out_w, opts_.kernel, opts_.stride, g.pad_top, g.pad_left};
  const int K = opts_.kernel * opts_.kernel * in.c;
  const int P = g.out_h * g.out_w;
  const bool direct = opts_.kernel == 1 && opts_.stride == 1;

  Tensor grad = grad_out;
  if (opts_.activation == Activation::Relu) {
    auto gd = grad.data();
    auto yd = cached_output_.data();
    for (std::size_t k = 0; k < gd.size(); ++k) {
      if (yd[k] <= 0.0f) gd[k] = 0.0f;
    }
  }

  auto& kernel = params_[0];
  if (kernel.grad.size() != kernel.size()) kernel.grad.assign(kernel.size(), 0.0f);
  MutMap dW(kernel.grad.data(), K, opts_.filters);
  ConstMap W(kernel.value.data(), K, opts_.filters);
  float* bias_grad = nullptr;
  if (opts_.use_bias) {
    auto& bias = params_[1];
    if (bias.grad.size() != bias.size()) bias.grad.assign(bias.size(), 0.0f);
    bias_grad = bias.grad.data();
  }

  Tensor dx;
  if (need_input_grad) dx = Tensor(in);
  FloatBuffer cols(direct ? 0 : static_cast<std::size_t>(P) * K);
  FloatBuffer dcols(need_input_grad && !direct ? static_cast<std::size_t>(P) * K : 0);

  for (int i = 0; i < in.n; ++i) {
    const float* patches = cached_input_.sample(i);
    if (!direct) {
      im2col(cached_input_.sample(i), cg, cols.data());
      patches = cols.data();
    }
    ConstMap G(grad.sample(i), P, opts_.filters);
    dW.noalias() += ConstMap(patches, P, K).transpose() * G;
    if (bias_grad) Eigen::Map<RowVec>(bias_grad, opts_.filters) += G.colwise().sum();
    if (need_input_grad) {
      if (direct) {
        MutMap(dx.sample(i), P, K).noalias() = G * W.transpose();
      } else {
        MutMap(dcols.data(), P, K).noalias() = G * W.transpose();
        col2im_add(dcols.data(), cg, dx.sample(i));
      }
    }
  }
  return dx;
}

void Conv2D::initialize(Rng& rng) {
  const int area = opts_.kernel * opts_.kernel;
  glorot_uniform(params_[0], area * in_channels_, area * opts_.filters, rng);
  if (opts_.use_bias) fill(params_[1], 0.0f);
}

// DepthwiseConv2D -----------------------------------------------------------

DepthwiseConv2D::DepthwiseConv2D(std::string name, int channels, int kernel, int stride, Padding padding)
    : Layer(std::move(name)), channels_(channels), kernel_(kernel), stride_(stride), padding_(padding) {
  add_parameter("depthwise_kernel", {kernel, kernel, channels, 1});
}

Shape DepthwiseConv2D::output_shape(const Shape& in) const {
  if (in.c != channels_) shape_error(name(), "channel mismatch for input " + to_string(in));
  const auto [oh, pt] = conv_axis(in.h, kernel_, stride_, padding_);
  const auto [ow, pl] = conv_axis(in.w, kernel_, stride_, padding_);
  if (oh <= 0 || ow <= 0) shape_error(name(), "input smaller than kernel");
  return {in.n, oh, ow, channels_};
}

Tensor DepthwiseConv2D::forward(const Tensor& x) const {
  const Shape in = x.shape();
  const Shape os = output_shape(in);
  const int pad_top = conv_axis(in.h, kernel_, stride_, padding_).second;
  const int pad_left = conv_axis(in.w, kernel_, stride_, padding_).second;
  const float* w = params_[0].value.data();
  const int C = channels_;
  Tensor y(os);
  for (int i = 0; i < in.n; ++i) {
    const float* src = x.sample(i);
    float* dst = y.sample(i);
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        float* acc = dst + (static_cast<std::size_t>(oy) * os.w + ox) * C;
        for (int ky = 0; ky < kernel_; ++ky) {
          const int iy = oy * stride_ - pad_top + ky;
          if (iy < 0 || iy >= in.h) continue;
          for (int kx = 0; kx < kernel_; ++kx) {
            const int ix = ox * stride_ - pad_left + kx;
            if (ix < 0 || ix >= in.w) continue;
            const float* px = src + (static_cast<std::size_t>(iy) * in.w + ix) * C;
            const float* wk = w + (static_cast<std::size_t>(ky) * kernel_ + kx) * C;
            for (int c = 0; c < C; ++c) acc[c] += px[c] * wk[c];
          }
        }
      }
    }
  }
  return y;
}

void DepthwiseConv2D::initialize(Rng& rng) {
  glorot_uniform(params_[0], kernel_ * kernel_, kernel_ * kernel_, rng);
}

// BatchNormalization --------------------------------------------------------

BatchNormalization::BatchNormalization(std::string name, int channels, float epsilon)
    : Layer(std::move(name)), channels_(channels), epsilon_(epsilon) {
  params_.reserve(4);
  add_parameter("gamma", {channels});
  add_parameter("beta", {channels});
  add_parameter("moving_mean", {channels}, true);
  add_parameter("moving_variance", {channels}, true);
  fill(params_[0], 1.0f);
  fill(params_[3], 1.0f);
}

Shape BatchNormalization::output_shape(const Shape& in) const {
  if (in.c != channels_) shape_error(name(), "channel mismatch for input " + to_string(in));
  return in;
}

Tensor BatchNormalization::forward(const Tensor& x) const {
  output_shape(x.shape());
  FloatBuffer scale(static_cast<std::size_t>(channels_));
  FloatBuffer shift(static_cast<std::size_t>(channels_));
  for (int c = 0; c < channels_; ++c) {
    const auto k = static_cast<std::size_t>(c);
    scale[k] = params_[0].value[k] / std::sqrt(params_[3].value[k] + epsilon_);
    shift[k] = params_[1].value[k] - params_[2].value[k] * scale[k];
  }
  Tensor y = x;
  auto d = y.data();
  const std::size_t positions = d.size() / static_cast<std::size_t>(channels_);
  for (std::size_t p = 0; p < positions; ++p) {
    float* row = d.data() + p * static_cast<std::size_t>(channels_);
    for (int c = 0; c < channels_; ++c) row[c] = row[c] * scale[static_cast<std::size_t>(c)] + shift[static_cast<std::size_t>(c)];
  }
  return y;
}

void BatchNormalization::initialize(Rng&) {
  fill(params_[0], 1.0f);
  fill(params_[1], 0.0f);
  fill(params_[2], 0.0f);
  fill(params_[3], 1.0f);
}

// ReLU ----------------------------------------------------------------------

ReLU::ReLU(std::string name, std::optional<float> max_value) : Layer(std::move(name)), max_value_(max_value) {}

Tensor ReLU::forward(const Tensor& x) const {
  Tensor y = x;
  const float hi = max_value_.value_or(std::numeric_limits<float>::infinity());
  for (float& v : y.data()) v = std::min(std::max(v, 0.0f), hi);
  return y;
}

Tensor ReLU::forward_train(const Tensor& x, TrainContext&) {
  cached_input_ = x;
  return forward(x);
}

Tensor ReLU::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  Tensor dx = grad_out;
  const float hi = max_value_.value_or(std::numeric_limits<float>::infinity());
  auto d = dx.data();
  auto xs = cached_input_.data();
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (!(xs[k] > 0.0f && xs[k] < hi)) d[k] = 0.0f;
  }
  return dx;
}

// ZeroPadding2D -------------------------------------------------------------

ZeroPadding2D::ZeroPadding2D(std::string name, int top, int bottom, int left, int right)
    : Layer(std::move(name)), top_(top), bottom_(bottom), left_(left), right_(right) {}

Shape ZeroPadding2D::output_shape(const Shape& in) const {
  return {in.n, in.h + top_ + bottom_, in.w + left_ + right_, in.c};
}

Tensor ZeroPadding2D::forward(const Tensor& x) const {
  const Shape in = x.shape();
  const Shape os = output_shape(in);
  Tensor y(os);
  const std::size_t row = static_cast<std::size_t>(in.w) * in.c;
  for (int i = 0; i < in.n; ++i) {
    for (int r = 0; r < in.h; ++r) {
      const float* src = x.sample(i) + static_cast<std::size_t>(r) * row;
      float* dst = y.sample(i) + (static_cast<std::size_t>(r + top_) * os.w + left_) * os.c;
      std::copy(src, src + row, dst);
    }
  }
  return y;
}

Tensor ZeroPadding2D::forward_train(const Tensor& x, TrainContext&) {
  cached_in_ = x.shape();
  return forward(x);
}

Tensor ZeroPadding2D::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  const Shape in = cached_in_;
  const Shape os = output_shape(in);
  Tensor dx(in);
  const std::size_t row = static_cast<std::size_t>(in.w) * in.c;
  for (int i = 0; i < in.n; ++i) {
    for (int r = 0; r < in.h; ++r) {
      const float* src = grad_out.sample(i) + (static_cast<std::size_t>(r + top_) * os.w + left_) * os.c;
      std::copy(src, src + row, dx.sample(i) + static_cast<std::size_t>(r) * row);
    }
  }
  return dx;
}

// MaxPooling2D --------------------------------------------------------------

MaxPooling2D::MaxPooling2D(std::string name, int pool, int stride)
    : Layer(std::move(name)), pool_(pool), stride_(stride) {}

Shape MaxPooling2D::output_shape(const Shape& in) const {
  if (in.h < pool_ || in.w < pool_) shape_error(name(), "input " + to_string(in) + " smaller than pool");
  return {in.n, (in.h - pool_) / stride_ + 1, (in.w - pool_) / stride_ + 1, in.c};
}

Tensor MaxPooling2D::pool(const Tensor& x, std::vector<std::size_t>* argmax) const {
  const Shape in = x.shape();
  const Shape os = output_shape(in);
  Tensor y(os);
  if (argmax) argmax->assign(y.size(), 0);
  const auto base = x.data().data();
  std::size_t o = 0;
  for (int i = 0; i < in.n; ++i) {
    const std::size_t sample_off = static_cast<std::size_t>(i) * in.sample_size();
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        for (int c = 0; c < in.c; ++c, ++o) {
          float best = -std::numeric_limits<float>::infinity();
          std::size_t best_idx = 0;
          for (int ky = 0; ky < pool_; ++ky) {
            for (int kx = 0; kx < pool_; ++kx) {
              const std::size_t idx =
                  sample_off +
                  (static_cast<std::size_t>(oy * stride_ + ky) * in.w + (ox * stride_ + kx)) * in.c + c;
              if (base[idx] > best) {
                best = base[idx];
                best_idx = idx;
              }
            }
          }
          y.data()[o] = best;
          if (argmax) (*argmax)[o] = best_idx;
        }
      }
    }
  }
  return y;
}

Tensor MaxPooling2D::forward(const Tensor& x) const { return pool(x, nullptr); }

Tensor MaxPooling2D::forward_train(const Tensor& x, TrainContext&) {
  cached_in_ = x.shape();
  return pool(x, &argmax_);
}

Tensor MaxPooling2D::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  if (grad_out.size() != argmax_.size()) shape_error(name(), "gradient shape mismatch");
  Tensor dx(cached_in_);
  auto d = dx.data();
  auto g = grad_out.data();
  for (std::size_t o = 0; o < g.size(); ++o) d[argmax_[o]] += g[o];
  return dx;
}

// Dropout -------------------------------------------------------------------

Dropout::Dropout(std::string name, float rate) : Layer(std::move(name)), rate_(rate) {
  if (!(rate >= 0.0f && rate < 1.0f)) shape_error(this->name(), "dropout rate must lie in [0, 1)");
}

Tensor Dropout::forward_train(const Tensor& x, TrainContext& ctx) {
  if (!ctx.rng) throw Error(ErrorCode::Contract, name() + ": training forward needs an rng");
  const float keep_scale = 1.0f / (1.0f - rate_);
  mask_.resize(x.size());
  for (float& m : mask_) m = uniform01(*ctx.rng) >= rate_ ? keep_scale : 0.0f;
  Tensor y = x;
  auto d = y.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] *= mask_[k];
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  Tensor dx = grad_out;
  auto d = dx.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] *= mask_[k];
  return dx;
}

// Flatten -------------------------------------------------------------------

Shape Flatten::output_shape(const Shape& in) const {
  return {in.n, 1, 1, static_cast<int>(in.sample_size())};
}

Tensor Flatten::forward(const Tensor& x) const {
  return Tensor(x).reshaped(output_shape(x.shape()));
}

Tensor Flatten::forward_train(const Tensor& x, TrainContext&) {
  cached_in_ = x.shape();
  return forward(x);
}

Tensor Flatten::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  return Tensor(grad_out).reshaped(cached_in_);
}

// Dense ---------------------------------------------------------------------

Dense::Dense(std::string name, int in_features, int units, Activation activation)
    : Layer(std::move(name)), in_features_(in_features), units_(units), activation_(activation) {
  if (activation == Activation::Relu) shape_error(this->name(), "dense relu is not supported");
  params_.reserve(2);
  add_parameter("kernel", {in_features, units});
  add_parameter("bias", {units});
}

Shape Dense::output_shape(const Shape& in) const {
  if (in.h != 1 || in.w != 1 || in.c != in_features_) {
    shape_error(name(), "expected (N, 1, 1, " + std::to_string(in_features_) + "), got " + to_string(in));
  }
  return {in.n, 1, 1, units_};
}

Tensor Dense::forward(const Tensor& x) const {
  const Shape os = output_shape(x.shape());
  Tensor y(os);
  MutMap Y(y.data().data(), os.n, units_);
  Y.noalias() = ConstMap(x.data().data(), os.n, in_features_) *
                ConstMap(params_[0].value.data(), in_features_, units_);
  Y.rowwise() += Eigen::Map<const RowVec>(params_[1].value.data(), units_);
  return y;
}

Tensor Dense::forward_train(const Tensor& x, TrainContext&) {
  cached_input_ = x;
  return forward(x);
}

Tensor Dense::backward(const Tensor& grad_out, bool need_input_grad) {
  const int n = cached_input_.n();
  if (grad_out.shape() != Shape{n, 1, 1, units_}) shape_error(name(), "gradient shape mismatch");
  auto& kernel = params_[0];
  auto& bias = params_[1];
  if (kernel.grad.size() != kernel.size()) kernel.grad.assign(kernel.size(), 0.0f);
  if (bias.grad.size() != bias.size()) bias.grad.assign(bias.size(), 0.0f);

  ConstMap X(cached_input_.data().data(), n, in_features_);
  ConstMap G(grad_out.data().data(), n, units_);
  MutMap(kernel.grad.data(), in_features_, units_).noalias() += X.transpose() * G;
  Eigen::Map<RowVec>(bias.grad.data(), units_) += G.colwise().sum();

  if (!need_input_grad) return {};
  Tensor dx(cached_input_.shape());
  MutMap(dx.data().data(), n, in_features_).noalias() =
      G * ConstMap(kernel.value.data(), in_features_, units_).transpose();
  return dx;
}

void Dense::initialize(Rng& rng) {
  glorot_uniform(params_[0], in_features_, units_, rng);
  fill(params_[1], 0.0f);
}

// ResidualBlock -------------------------------------------------------------

ResidualBlock::ResidualBlock(std::string name, std::vector<LayerPtr> main, std::vector<LayerPtr> shortcut)
    : Layer(std::move(name)), main_(std::move(main)), shortcut_(std::move(shortcut)) {}

Shape ResidualBlock::output_shape(const Shape& in) const {
  Shape m = in;
  for (const auto& l : main_) m = l->output_shape(m);
  Shape s = in;
  for (const auto& l : shortcut_) s = l->output_shape(s);
  if (m != s) shape_error(name(), "branch shapes differ: " + to_string(m) + " vs " + to_string(s));
  return m;
}

Tensor ResidualBlock::forward(const Tensor& x) const {
  Tensor m = x;
  for (const auto& l : main_) m = l->forward(m);
  Tensor s = x;
  for (const auto& l : shortcut_) s = l->forward(s);
  if (m.shape() != s.shape()) shape_error(name(), "branch shapes differ");
  auto md = m.data();
  auto sd = s.data();
  for (std::size_t k = 0; k < md.size(); ++k) md[k] = std::max(md[k] + sd[k], 0.0f);
  return m;
}

void ResidualBlock::initialize(Rng& rng) {
  for (auto& l : shortcut_) l->initialize(rng);
  for (auto& l : main_) l->initialize(rng);
}

void ResidualBlock::for_each_parameter(const std::function<void(Parameter&)>& fn) {
  for (auto& l : shortcut_) l->for_each_parameter(fn);
  for (auto& l : main_) l->for_each_parameter(fn);
}

void ResidualBlock::for_each_parameter(const std::function<void(const Parameter&)>& fn) const {
  for (const auto& l : shortcut_) std::as_const(*l).for_each_parameter(fn);
  for (const auto& l : main_) std::as_const(*l).for_each_parameter(fn);
}

void ResidualBlock::describe(const Shape& in, std::vector<LayerInfo>& out) const {
  Shape s = in;
  for (const auto& l : shortcut_) {
    l->describe(s, out);
    s = l->output_shape(s);
  }
  Shape m = in;
  for (const auto& l : main_) {
    l->describe(m, out);
    m = l->output_shape(m);
  }
  out.push_back({name() + "_add", "Add", m, 0});
  out.push_back({name() + "_out", "ReLU", m, 0});
}

}  // namespace hema::nn
