// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "hema/evaluator.hpp"
#include "hema/history.hpp"
#include "hema/nn/graph.hpp"
#include "hema/streams.hpp"

namespace hema {

struct TrainConfig {
  int epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  /// Inverse-frequency class weighting of the loss (off by default).
  bool class_weights = false;

  void validate() const;
};

struct TrainedModel {
  nn::ModelGraph model;
  TrainingHistory history;
  TrainConfig config;
  std::string arch_name;
  double best_val_accuracy = 0.0;
  int best_epoch = 0;  // zero-based

  /// Validation loss of the retained snapshot.
  double best_val_loss() const { return history.val_loss.at(static_cast<std::size_t>(best_epoch)); }
};

struct EpochReport {
  int epoch = 0;  // one-based
  double train_accuracy = 0.0;
  double train_loss = 0.0;
  Metrics val;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Trains for config.epochs epochs with Adam on softmax cross-entropy,
/// evaluates the whole validation stream after every epoch and keeps the
/// weights of the epoch with the highest validation accuracy (earliest on
/// ties). Throws Contract on input-shape mismatch before any step and
/// Divergence on a non-finite loss.
TrainedModel train(nn::ModelGraph model, BatchSource& train_stream, BatchSource& val_stream,
                   const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Inverse-frequency weights n / (k * n_c); zero-count classes get weight 0.
std::array<float, kNumClasses> inverse_frequency_weights(const std::array<std::size_t, kNumClasses>& counts);

/// What model selection looks at.
struct SelectionKey {
  std::string_view arch_name;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
};

/// Highest validation accuracy; ties go to the lower validation loss, then
/// to the architecture name in ascending order. Throws Argument when empty.
std::size_t select_best_index(std::span<const SelectionKey> candidates);

const TrainedModel& select_best(std::span<const TrainedModel> candidates);

}  // namespace hema
