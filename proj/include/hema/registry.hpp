// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hema/evaluator.hpp"
#include "hema/nn/graph.hpp"
#include "hema/trainer.hpp"

namespace hema {

struct ModelArtifactMeta {
  std::string model_id;
  std::string arch_name;
  std::string created_at;  // ISO-8601 UTC
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  std::optional<double> test_accuracy;
  std::optional<double> test_loss;
  std::string weights_path;  // relative to the registry root
  int best_epoch = 0;
  TrainConfig config;
  std::vector<std::string> labels;  // display names, canonical order

  friend bool operator==(const ModelArtifactMeta& a, const ModelArtifactMeta& b);
};

/// Registry layout under `root`:
///   index.jsonl            one ModelArtifactMeta per line, append-only
///   weights/<id>.hwts      full model weights (bit-exact float32)
///   history/<id>.csv       learning curves
///   reports/<id>.json      evaluation report, when one was supplied
/// model_id is the first 16 hex digits of the weights file's SHA-256.
/// Writers replace files through temp-file + rename; one writer at a time.
class Registry {
 public:
  explicit Registry(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Throws Conflict when the id already exists and Io on write failure.
  std::string save_artifact(const TrainedModel& trained, const EvaluationReport* report = nullptr);

  /// Throws NotFound for unknown ids, Integrity for missing or corrupt weights.
  std::pair<nn::ModelGraph, ModelArtifactMeta> load_artifact(std::string_view model_id) const;

  /// Index rows in insertion order; an absent index is an empty registry.
  std::vector<ModelArtifactMeta> list() const;
  /// Index rows ordered best first (the selection order of best_model).
  std::vector<ModelArtifactMeta> ranked() const;
  std::optional<ModelArtifactMeta> find(std::string_view model_id) const;

  /// Throws NotFound on an empty registry.
  std::string best_model() const;

  std::optional<EvaluationReport> report(std::string_view model_id) const;
  std::optional<TrainingHistory> history(std::string_view model_id) const;

  struct AuditResult {
    std::vector<std::string> missing_weights;  // ids whose weights file is gone
    std::vector<std::filesystem::path> orphans;  // weight files with no index row
    bool ok() const noexcept { return missing_weights.empty() && orphans.empty(); }
  };
  AuditResult audit() const;

 private:
  std::filesystem::path index_path() const { return root_ / "index.jsonl"; }

  std::filesystem::path root_;
};

std::string meta_to_json(const ModelArtifactMeta& meta, bool include_weights_path = true);
ModelArtifactMeta meta_from_json(std::string_view line);

}  // namespace hema
