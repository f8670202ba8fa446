// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hema/history.hpp"
#include "hema/labels.hpp"
#include "hema/nn/graph.hpp"
#include "hema/streams.hpp"

namespace hema {

/// rows = true class, columns = predicted class
using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

struct Metrics {
  double accuracy = 0.0;
  double loss = 0.0;
  ConfusionMatrix confusion{};

  std::size_t count() const noexcept;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Lower bound applied to the true-class probability inside the log.
inline constexpr double kProbabilityFloor = 1e-7;

/// One full augmentation-free pass over `stream` (reset first). Prediction
/// is the argmax with ties to the lowest class index; loss is the mean of
/// -log(max(p_true, 1e-7)).
Metrics evaluate(const nn::Classifier& model, BatchSource& stream);

struct EvaluationReport {
  std::string arch_name;
  std::string model_id;
  std::optional<Metrics> train;
  std::optional<Metrics> val;
  Metrics test;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// {arch_name, model_id, splits: {train?, val?, test: {accuracy, loss, confusion}}}
std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(std::string_view text);

struct ComparisonRow {
  std::string model;
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Sorted by descending test accuracy, then ascending loss, then name.
std::vector<ComparisonRow> comparison_table(std::span<const EvaluationReport> reports);

inline constexpr std::string_view kComparisonCsvHeader = "model,test_accuracy,test_loss";

std::string render_table_csv(std::span<const ComparisonRow> rows);
std::string render_table_text(std::span<const ComparisonRow> rows);

/// Writes the history CSV; Io error when the path is not writable.
void export_curves(const TrainingHistory& history, const std::filesystem::path& path);

}  // namespace hema
