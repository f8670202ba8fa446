// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hema/image.hpp"
#include "hema/ingest.hpp"
#include "hema/trainer.hpp"

namespace hema::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "hema");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Mean RGB colour of each synthetic class; far apart so a small model can
/// separate them from channel means alone.
std::array<float, 3> class_color(int label_id);

/// Solid class colour plus uniform noise of +-`noise` grey levels.
ImageTensor synthetic_image(int label_id, int height, int width, std::uint64_t seed, float noise = 20.0f);

struct CorpusOptions {
  int per_class = 10;
  int height = 32;
  int width = 40;
  std::string extension = ".png";
  std::uint64_t seed = 0;
};

/// Writes `<root>/{Benign,Early,Pre,Pro}/img_NNN<ext>` and returns root.
std::filesystem::path write_corpus(const std::filesystem::path& root, const CorpusOptions& options);

/// Corpus plus a default 70/15/15 manifest saved next to it.
SplitManifest write_corpus_and_manifest(const std::filesystem::path& dir, const CorpusOptions& options,
                                        const SplitRatios& ratios = kDefaultRatios, std::uint64_t split_seed = 42);

/// An untrained model dressed up as a finished run: randomly initialized
/// weights, a one-epoch history carrying the given validation figures.
TrainedModel fake_trained(const std::string& arch, std::uint64_t seed, double val_accuracy, double val_loss);

}  // namespace hema::testing
