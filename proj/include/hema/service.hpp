// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hema/pipeline.hpp"
#include "hema/registry.hpp"

namespace hema {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path registry;
  std::optional<std::string> model_id;  // overrides the registry's best model
  std::optional<std::filesystem::path> static_dir;
  std::size_t max_upload_bytes = std::size_t{10} << 20;
  PreprocessConfig preprocess;
};

struct DiagnosisResult {
  std::string predicted_label;  // display name
  std::vector<std::pair<std::string, double>> probabilities;  // canonical label order
  std::string model_id;
  std::int64_t elapsed_ms = 0;
};

std::string diagnosis_to_json(const DiagnosisResult& result);

/// HTTP front of a single read-only model. The model is resolved once in
/// the constructor; an empty registry leaves the service up without a model
/// and /api/diagnose answers 503.
class DiagnosisService {
 public:
  explicit DiagnosisService(ServiceOptions options);
  ~DiagnosisService();
  DiagnosisService(const DiagnosisService&) = delete;
  DiagnosisService& operator=(const DiagnosisService&) = delete;

  bool model_loaded() const noexcept;
  const std::optional<std::string>& model_id() const noexcept;

  /// Throws Decode for undecodable bytes and State when no model is loaded.
  DiagnosisResult diagnose(std::string_view image_bytes) const;

  std::string health_json() const;
  std::string models_json() const;

  /// Binds to options.port, or to an ephemeral port when it is 0.
  /// Returns the bound port; throws Io on failure.
  int bind();
  /// Blocks serving requests until stop().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hema
