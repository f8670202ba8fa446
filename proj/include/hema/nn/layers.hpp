// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hema/nn/tensor.hpp"
#include "hema/random.hpp"

namespace hema::nn {

/// A named weight array. Names follow "<layer>/<weight>" (e.g.
/// "conv_pw_3/kernel"), matching the Keras naming used by the exporter.
struct Parameter {
  std::string name;
  std::vector<int> shape;
  FloatBuffer value;
  FloatBuffer grad;
  bool trainable = true;
  /// Statistics such as BN moving averages are never trainable.
  bool statistic = false;

  std::size_t size() const noexcept { return value.size(); }
};

/// Per-step state used by training-mode forward passes.
struct TrainContext {
  Rng* rng = nullptr;
};

struct LayerInfo {
  std::string name;
  std::string kind;
  Shape output;
  std::size_t params = 0;
};

enum class Padding { Valid, Same };
enum class Activation { Linear, Relu, Softmax };

class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const std::string& name() const noexcept { return name_; }
  virtual std::string_view kind() const = 0;

  /// Output shape for an input shape; throws Contract when incompatible.
  virtual Shape output_shape(const Shape& in) const = 0;

  /// Inference forward. Const and reentrant.
  virtual Tensor forward(const Tensor& x) const = 0;

  /// Training forward; may cache what backward needs.
  virtual Tensor forward_train(const Tensor& x, TrainContext&) { return forward(x); }

  /// Accumulates parameter gradients from the last forward_train and returns
  /// dL/dx (empty when `need_input_grad` is false).
  virtual Tensor backward(const Tensor& grad_out, bool need_input_grad);
  virtual bool supports_backward() const { return false; }

  /// Fresh initial values (Glorot-uniform kernels, zero biases, identity BN).
  virtual void initialize(Rng&) {}

  virtual void for_each_parameter(const std::function<void(Parameter&)>& fn);
  virtual void for_each_parameter(const std::function<void(const Parameter&)>& fn) const;

  /// Appends summary rows; containers expand into their children.
  virtual void describe(const Shape& in, std::vector<LayerInfo>& out) const;

  void set_trainable(bool trainable);

 protected:
  Parameter& add_parameter(std::string weight, std::vector<int> shape, bool statistic = false);
  std::size_t own_parameter_count() const;

  std::vector<Parameter> params_;

 private:
  std::string name_;
};

using LayerPtr = std::unique_ptr<Layer>;

struct Conv2DOptions {
  int filters = 0;
  int kernel = 3;
  int stride = 1;
  Padding padding = Padding::Same;
  bool use_bias = true;
  Activation activation = Activation::Linear;
};

/// Standard convolution via im2col + GEMM. Kernel layout is HWIO
/// [kh, kw, in, out]; 'same' padding follows the TensorFlow convention
/// (extra row/column goes after).
class Conv2D final : public Layer {
 public:
  Conv2D(std::string name, int in_channels, Conv2DOptions opts);

  std::string_view kind() const override { return "Conv2D"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x) const override;
  Tensor forward_train(const Tensor& x, TrainContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  bool supports_backward() const override { return true; }
  void initialize(Rng& rng) override;

  const Conv2DOptions& options() const noexcept { return opts_; }

 private:
  struct Geometry {
    int out_h, out_w, pad_top, pad_left;
  };
  Geometry geometry(const Shape& in) const;

  int in_channels_;
  Conv2DOptions opts_;
  Tensor cached_input_;
  Tensor cached_output_;
};

/// Per-channel 3x3 (or k x k) convolution, depth multiplier 1, no bias.
class DepthwiseConv2D final : public Layer {
 public:
  DepthwiseConv2D(std::string name, int channels, int kernel, int stride, Padding padding);

  std::string_view kind() const override { return "DepthwiseConv2D"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x) const override;
  void initialize(Rng& rng) override;

 private:
  int channels_;
  int kernel_;
  int stride_;
  Padding padding_;
};

/// Inference-mode batch normalization using the moving statistics.
class BatchNormalization final : public Layer {
 public:
  BatchNormalization(std::string name, int channels, float epsilon = 1e-3f);

  std::string_view kind() const override { return "BatchNormalization"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x) const override;
  void initialize(Rng& rng) override;

 private:
  int channels_;
  float epsilon_;
};

/// max(x, 0), optionally capped (ReLU6 when max_value == 6).
class ReLU final : public Layer {
 public:
  explicit ReLU(std::string name, std::optional<float> max_value = std::nullopt);

  std::string_view kind() const override { return "ReLU"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x) const override;
  Tensor forward_train(const Tensor& x, TrainContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  bool supports_backward() const override { return true; }

 private:
  std::optional<float> max_value_;
  Tensor cached_input_;
};

class ZeroPadding2D final : public Layer {
 public:
  ZeroPadding2D(std::string name, int top, int bottom, int left, int right);

  std::string_view kind() const override { return "ZeroPadding2D"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x) const override;
  Tensor forward_train(const Tensor& x, TrainContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  bool supports_backward() const override { return true; }

 private:
  int top_, bottom_, left_, right_;
  Shape cached_in_;
};

/// Valid-padded max pooling.
class MaxPooling2D final : public Layer {
 public:
  MaxPooling2D(std::string name, int pool, int stride);

  std::string_view kind() const override { return "MaxPooling2D"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x) const override;
  Tensor forward_train(const Tensor& x, TrainContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  bool supports_backward() const override { return true; }

 private:
  Tensor pool(const Tensor& x, std::vector<std::size_t>* argmax) const;

  int pool_;
  int stride_;
  Shape cached_in_;
  std::vector<std::size_t> argmax_;
};

/// Inverted dropout: active only in training, survivors scaled by 1/(1-rate).
class Dropout final : public Layer {
 public:
  Dropout(std::string name, float rate);

  std::string_view kind() const override { return "Dropout"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x) const override { return x; }
  Tensor forward_train(const Tensor& x, TrainContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  bool supports_backward() const override { return true; }

  float rate() const noexcept { return rate_; }

 private:
  float rate_;
  FloatBuffer mask_;
};

class Flatten final : public Layer {
 public:
  explicit Flatten(std::string name) : Layer(std::move(name)) {}

  std::string_view kind() const override { return "Flatten"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x) const override;
  Tensor forward_train(const Tensor& x, TrainContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  bool supports_backward() const override { return true; }

 private:
  Shape cached_in_;
};

/// Fully connected layer on (N, 1, 1, F) inputs; kernel [F, units].
/// A Softmax activation is recorded here but applied by the owning graph,
/// fused with the cross-entropy loss; forward() returns pre-activations.
class Dense final : public Layer {
 public:
  Dense(std::string name, int in_features, int units, Activation activation);

  std::string_view kind() const override { return "Dense"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x) const override;
  Tensor forward_train(const Tensor& x, TrainContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  bool supports_backward() const override { return true; }
  void initialize(Rng& rng) override;

  int units() const noexcept { return units_; }
  int in_features() const noexcept { return in_features_; }
  Activation activation() const noexcept { return activation_; }
  Parameter& kernel() noexcept { return params_[0]; }
  Parameter& bias() noexcept { return params_[1]; }

 private:
  int in_features_;
  int units_;
  Activation activation_;
  Tensor cached_input_;
};

/// Bottleneck residual block: relu(main(x) + shortcut(x)). An empty
/// shortcut is the identity. Inference only.
class ResidualBlock final : public Layer {
 public:
  ResidualBlock(std::string name, std::vector<LayerPtr> main, std::vector<LayerPtr> shortcut);

  std::string_view kind() const override { return "ResidualBlock"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x) const override;
  void initialize(Rng& rng) override;
  void for_each_parameter(const std::function<void(Parameter&)>& fn) override;
  void for_each_parameter(const std::function<void(const Parameter&)>& fn) const override;
  void describe(const Shape& in, std::vector<LayerInfo>& out) const override;

 private:
  std::vector<LayerPtr> main_;
  std::vector<LayerPtr> shortcut_;
};

}  // namespace hema::nn
