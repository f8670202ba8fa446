// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hema/labels.hpp"
#include "hema/nn/layers.hpp"
#include "hema/nn/tensor.hpp"

namespace hema::nn {

using ClassProbabilities = std::array<float, kNumClasses>;

/// Anything that maps a batch of preprocessed images to per-class
/// probabilities. Implementations must be safe for concurrent predict calls.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::vector<ClassProbabilities> predict(const Tensor& batch) const = 0;
};

struct ParameterAudit {
  std::size_t total = 0;
  std::size_t trainable = 0;
  std::size_t frozen = 0;

  friend bool operator==(const ParameterAudit&, const ParameterAudit&) = default;
};

struct ArchitectureSpec {
  std::string name;
  Shape input_shape{1, 224, 224, 3};  // n is ignored
  int num_classes = static_cast<int>(kNumClasses);
  bool backbone_frozen = false;
  std::vector<LayerInfo> layer_summary;
};

/// Sequential classifier: layers..., Flatten, Dense(num_classes, softmax).
/// The graph applies the head's softmax; training works on logits.
class ModelGraph final : public Classifier {
 public:
  ModelGraph(ArchitectureSpec spec, std::vector<LayerPtr> layers);
  ModelGraph(ModelGraph&&) noexcept = default;
  ModelGraph& operator=(ModelGraph&&) noexcept = default;

  const ArchitectureSpec& spec() const noexcept { return spec_; }
  const std::string& name() const noexcept { return spec_.name; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  Dense& head();
  const Dense& head() const;

  /// Pre-softmax outputs, computed in micro-batches.
  Tensor logits(const Tensor& batch) const;
  std::vector<ClassProbabilities> predict(const Tensor& batch) const override;

  /// Freezes every layer before index `first_trainable`.
  void freeze_before(std::size_t first_trainable);
  /// Index of the first layer owning a trainable parameter (num_layers() if none).
  std::size_t first_trainable_layer() const;

  /// Training-mode forward returning logits. Frozen leading layers run in
  /// inference mode and are never differentiated.
  Tensor forward_train(const Tensor& batch, TrainContext& ctx);
  /// Backpropagates dL/dlogits into the trainable layers' gradients.
  void backward(const Tensor& grad_logits);
  void zero_grad();

  void initialize(Rng& rng);

  void for_each_parameter(const std::function<void(Parameter&)>& fn);
  void for_each_parameter(const std::function<void(const Parameter&)>& fn) const;

  ParameterAudit audit() const;

 private:
  void validate();

  ArchitectureSpec spec_;
  std::vector<LayerPtr> layers_;
};

ParameterAudit audit_parameters(const ModelGraph& model);

/// Row-wise numerically stable softmax over an (N, 1, 1, K) tensor.
std::vector<ClassProbabilities> softmax_rows(const Tensor& logits);

struct LossResult {
  double loss = 0.0;      // weighted mean cross-entropy
  std::size_t correct = 0;
  Tensor grad_logits;     // dL/dlogits
};

/// Softmax cross-entropy on logits. `class_weights` (optional, size 4)
/// scales each sample's term; the mean divides by the batch size.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                 std::span<const float> class_weights = {});

/// Argmax with ties resolved to the lowest class index.
int argmax(const ClassProbabilities& p);

/// Adaptive-moment optimizer over the trainable parameters of one graph.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-7);

  void step(ModelGraph& model);
  long iterations() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<FloatBuffer> m_;
  std::vector<FloatBuffer> v_;
};

}  // namespace hema::nn
