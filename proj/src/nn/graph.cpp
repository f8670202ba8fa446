// SPDX-License-Identifier: Apache-2.0
#include "hema/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hema/error.hpp"

namespace hema::nn {

namespace {

constexpr int kInferenceChunk = 8;

}  // namespace

ModelGraph::ModelGraph(ArchitectureSpec spec, std::vector<LayerPtr> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
  validate();
}

void ModelGraph::validate() {
  if (layers_.empty()) throw Error(ErrorCode::Contract, "model has no layers");
  auto* dense = dynamic_cast<Dense*>(layers_.back().get());
  if (!dense || dense->units() != spec_.num_classes || dense->activation() != Activation::Softmax) {
    throw Error(ErrorCode::Contract, spec_.name + ": classifier head must be Dense(" +
                                         std::to_string(spec_.num_classes) + ", softmax)");
  }
  if (spec_.num_classes != static_cast<int>(kNumClasses)) {
    throw Error(ErrorCode::Contract, "models must have exactly " + std::to_string(kNumClasses) + " classes");
  }
  spec_.layer_summary.clear();
  Shape s = spec_.input_shape;
  s.n = 1;
  for (const auto& l : layers_) {
    l->describe(s, spec_.layer_summary);
    s = l->output_shape(s);
  }
}

Dense& ModelGraph::head() { return static_cast<Dense&>(*layers_.back()); }
const Dense& ModelGraph::head() const { return static_cast<const Dense&>(*layers_.back()); }

Tensor ModelGraph::logits(const Tensor& batch) const {
  const Shape& in = batch.shape();
  if (in.h != spec_.input_shape.h || in.w != spec_.input_shape.w || in.c != spec_.input_shape.c) {
    throw Error(ErrorCode::Contract, spec_.name + ": input " + to_string(in) + " does not match model input " +
                                         to_string(spec_.input_shape));
  }
  std::vector<Tensor> parts;
  for (int first = 0; first < in.n; first += kInferenceChunk) {
    Tensor x = batch.slice(first, std::min(kInferenceChunk, in.n - first));
    for (const auto& l : layers_) x = l->forward(x);
    parts.push_back(std::move(x));
  }
  if (parts.empty()) return Tensor({0, 1, 1, spec_.num_classes});
  return concat_batch(parts);
}

std::vector<ClassProbabilities> ModelGraph::predict(const Tensor& batch) const {
  return softmax_rows(logits(batch));
}

void ModelGraph::freeze_before(std::size_t first_trainable) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->set_trainable(i >= first_trainable);
}

std::size_t ModelGraph::first_trainable_layer() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    bool trainable = false;
    std::as_const(*layers_[i]).for_each_parameter([&](const Parameter& p) { trainable |= p.trainable; });
    if (trainable) return i;
  }
  return layers_.size();
}

Tensor ModelGraph::forward_train(const Tensor& batch, TrainContext& ctx) {
  const std::size_t first = first_trainable_layer();
  for (std::size_t i = first; i < layers_.size(); ++i) {
    if (!layers_[i]->supports_backward()) {
      throw Error(ErrorCode::Contract, spec_.name + ": layer " + layers_[i]->name() +
                                           " is trainable-path but cannot be differentiated");
    }
  }
  Tensor x;
  if (first == 0) {
    x = batch;
  } else {
    std::vector<Tensor> parts;
    for (int lo = 0; lo < batch.n(); lo += kInferenceChunk) {
      Tensor part = batch.slice(lo, std::min(kInferenceChunk, batch.n() - lo));
      for (std::size_t i = 0; i < first; ++i) part = layers_[i]->forward(part);
      parts.push_back(std::move(part));
    }
    x = concat_batch(parts);
  }
  for (std::size_t i = first; i < layers_.size(); ++i) x = layers_[i]->forward_train(x, ctx);
  return x;
}

void ModelGraph::backward(const Tensor& grad_logits) {
  const std::size_t first = first_trainable_layer();
  Tensor g = grad_logits;
  for (std::size_t i = layers_.size(); i-- > first;) {
    g = layers_[i]->backward(g, i > first);
  }
}

void ModelGraph::zero_grad() {
  for_each_parameter([](Parameter& p) {
    if (p.trainable) p.grad.assign(p.size(), 0.0f);
    else p.grad.clear();
  });
}

void ModelGraph::initialize(Rng& rng) {
  for (auto& l : layers_) l->initialize(rng);
}

void ModelGraph::for_each_parameter(const std::function<void(Parameter&)>& fn) {
  for (auto& l : layers_) l->for_each_parameter(fn);
}

void ModelGraph::for_each_parameter(const std::function<void(const Parameter&)>& fn) const {
  for (const auto& l : layers_) std::as_const(*l).for_each_parameter(fn);
}

ParameterAudit ModelGraph::audit() const {
  ParameterAudit a;
  for_each_parameter([&](const Parameter& p) {
    a.total += p.size();
    (p.trainable ? a.trainable : a.frozen) += p.size();
  });
  return a;
}

ParameterAudit audit_parameters(const ModelGraph& model) { return model.audit(); }

std::vector<ClassProbabilities> softmax_rows(const Tensor& logits) {
  if (logits.h() != 1 || logits.w() != 1 || logits.c() != static_cast<int>(kNumClasses)) {
    throw Error(ErrorCode::Contract, "softmax expects (N, 1, 1, 4) logits, got " + to_string(logits.shape()));
  }
  std::vector<ClassProbabilities> out(static_cast<std::size_t>(logits.n()));
  for (int i = 0; i < logits.n(); ++i) {
    const float* z = logits.sample(i);
    const double m = *std::max_element(z, z + kNumClasses);
    double sum = 0.0;
    std::array<double, kNumClasses> e{};
    for (std::size_t k = 0; k < kNumClasses; ++k) sum += (e[k] = std::exp(z[k] - m));
    for (std::size_t k = 0; k < kNumClasses; ++k) out[static_cast<std::size_t>(i)][k] = static_cast<float>(e[k] / sum);
  }
  return out;
}

int argmax(const ClassProbabilities& p) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(kNumClasses); ++k) {
    if (p[static_cast<std::size_t>(k)] > p[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                 std::span<const float> class_weights) {
  const int n = logits.n();
  if (logits.c() != static_cast<int>(kNumClasses) || labels.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::Contract, "loss: logits/labels size mismatch");
  }
  if (!class_weights.empty() && class_weights.size() != kNumClasses) {
    throw Error(ErrorCode::Contract, "loss: expected one weight per class");
  }
  LossResult r;
  r.grad_logits = Tensor(logits.shape());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const float* z = logits.sample(i);
    const int y = labels[static_cast<std::size_t>(i)];
    const double w = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
    const double m = *std::max_element(z, z + kNumClasses);
    double sum = 0.0;
    for (std::size_t k = 0; k < kNumClasses; ++k) sum += std::exp(z[k] - m);
    const double lse = m + std::log(sum);
    total += w * (lse - z[y]);

    ClassProbabilities p{};
    float* g = r.grad_logits.sample(i);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const double pk = std::exp(z[k] - lse);
      p[k] = static_cast<float>(pk);
      g[k] = static_cast<float>(w * (pk - (static_cast<int>(k) == y ? 1.0 : 0.0)) / n);
    }
    if (argmax(p) == y) ++r.correct;
  }
  r.loss = n > 0 ? total / n : 0.0;
  return r;
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::Config, "learning_rate must be positive");
}

void Adam::step(ModelGraph& model) {
  ++t_;
  const double alpha =
      lr_ * std::sqrt(1.0 - std::pow(beta2_, static_cast<double>(t_))) / (1.0 - std::pow(beta1_, static_cast<double>(t_)));
  std::size_t slot = 0;
  model.for_each_parameter([&](Parameter& p) {
    if (!p.trainable) return;
    if (slot >= m_.size()) {
      m_.emplace_back(p.size(), 0.0f);
      v_.emplace_back(p.size(), 0.0f);
    }
    auto& m = m_[slot];
    auto& v = v_[slot];
    ++slot;
    if (p.grad.size() != p.size() || m.size() != p.size()) return;
    const auto b1 = static_cast<float>(beta1_);
    const auto b2 = static_cast<float>(beta2_);
    const auto a = static_cast<float>(alpha);
    const auto eps = static_cast<float>(eps_);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const float g = p.grad[k];
      m[k] = b1 * m[k] + (1.0f - b1) * g;
      v[k] = b2 * v[k] + (1.0f - b2) * g * g;
      p.value[k] -= a * m[k] / (std::sqrt(v[k]) + eps);
    }
  });
}

}  // namespace hema::nn
