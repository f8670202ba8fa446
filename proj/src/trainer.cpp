// SPDX-License-Identifier: Apache-2.0
#include "hema/trainer.hpp"

#include <cmath>
#include <vector>

#include "hema/error.hpp"

namespace hema {

namespace {

constexpr std::uint64_t kDropoutStream = 0x64726f70ULL;

std::vector<nn::FloatBuffer> snapshot_trainable(const nn::ModelGraph& model) {
  std::vector<nn::FloatBuffer> snap;
  model.for_each_parameter([&](const nn::Parameter& p) {
    if (p.trainable) snap.push_back(p.value);
  });
  return snap;
}

void restore_trainable(nn::ModelGraph& model, const std::vector<nn::FloatBuffer>& snap) {
  std::size_t k = 0;
  model.for_each_parameter([&](nn::Parameter& p) {
    if (p.trainable) p.value = snap.at(k++);
  });
}

void check_shape(const nn::ModelGraph& model, const BatchSource& stream, std::string_view which) {
  const auto s = stream.sample_shape();
  const auto& in = model.spec().input_shape;
  if (s.h != in.h || s.w != in.w || s.c != in.c) {
    throw Error(ErrorCode::Contract, std::string(which) + " stream yields " + nn::to_string(s) + " but " +
                                         model.name() + " expects " + nn::to_string(in));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::Config, "epochs must be at least 1");
  if (batch_size < 1) throw Error(ErrorCode::Config, "batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::Config, "learning_rate must be positive");
  }
}

std::array<float, kNumClasses> inverse_frequency_weights(const std::array<std::size_t, kNumClasses>& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  std::array<float, kNumClasses> w{};
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    w[k] = counts[k] == 0 ? 0.0f
                          : static_cast<float>(static_cast<double>(total) /
                                               (static_cast<double>(kNumClasses) * static_cast<double>(counts[k])));
  }
  return w;
}

TrainedModel train(nn::ModelGraph model, BatchSource& train_stream, BatchSource& val_stream,
                   const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  check_shape(model, train_stream, "train");
  check_shape(model, val_stream, "validation");
  if (train_stream.num_records() == 0) throw Error(ErrorCode::Data, "train stream is empty");

  std::array<float, kNumClasses> weights{};
  std::span<const float> weight_view;
  if (config.class_weights) {
    weights = inverse_frequency_weights(train_stream.class_counts());
    weight_view = weights;
  }

  Rng dropout_rng(derive_seed(config.seed, {kDropoutStream}));
  nn::TrainContext ctx{&dropout_rng};
  nn::Adam optimizer(config.learning_rate);

  TrainingHistory history;
  std::vector<nn::FloatBuffer> best_weights;
  double best_acc = -1.0;
  int best_epoch = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    train_stream.set_epoch(epoch);
    train_stream.reset();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t seen = 0;
    int batch_index = 0;
    while (auto batch = train_stream.next()) {
      model.zero_grad();
      const nn::Tensor logits = model.forward_train(batch->images, ctx);
      auto result = nn::softmax_cross_entropy(logits, batch->labels, weight_view);
      if (!std::isfinite(result.loss)) {
        throw Error(ErrorCode::Divergence, "non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                               std::to_string(batch_index + 1));
      }
      model.backward(result.grad_logits);
      optimizer.step(model);
      loss_sum += result.loss * static_cast<double>(batch->size());
      correct += result.correct;
      seen += batch->size();
      ++batch_index;
    }

    const Metrics val = evaluate(model, val_stream);
    const double train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    const double train_loss = loss_sum / static_cast<double>(seen);
    history.train_accuracy.push_back(train_acc);
    history.train_loss.push_back(train_loss);
    history.val_accuracy.push_back(val.accuracy);
    history.val_loss.push_back(val.loss);

    if (val.accuracy > best_acc) {
      best_acc = val.accuracy;
      best_epoch = epoch;
      best_weights = snapshot_trainable(model);
    }
    if (on_epoch) on_epoch({epoch + 1, train_acc, train_loss, val});
  }

  restore_trainable(model, best_weights);
  std::string arch = model.name();
  return TrainedModel{std::move(model), std::move(history), config, std::move(arch), best_acc, best_epoch};
}

std::size_t select_best_index(std::span<const SelectionKey> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::Argument, "select_best: no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& a = candidates[i];
    const auto& b = candidates[best];
    const bool better = a.val_accuracy != b.val_accuracy ? a.val_accuracy > b.val_accuracy
                        : a.val_loss != b.val_loss       ? a.val_loss < b.val_loss
                                                         : a.arch_name < b.arch_name;
    if (better) best = i;
  }
  return best;
}

const TrainedModel& select_best(std::span<const TrainedModel> candidates) {
  std::vector<SelectionKey> keys;
  keys.reserve(candidates.size());
  for (const auto& c : candidates) keys.push_back({c.arch_name, c.best_val_accuracy, c.best_val_loss()});
  return candidates[select_best_index(keys)];
}

}  // namespace hema
