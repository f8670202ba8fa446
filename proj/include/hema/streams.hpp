// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "hema/ingest.hpp"
#include "hema/nn/tensor.hpp"
#include "hema/pipeline.hpp"

namespace hema {

struct Batch {
  nn::Tensor images;                        // N x H x W x 3, normalized
  std::vector<int> labels;                  // class id per sample
  std::vector<std::size_t> record_indices;  // positions in the stream's record list

  std::size_t size() const noexcept { return labels.size(); }
  /// N x 4 one-hot targets, row-major.
  std::vector<float> one_hot() const;
};

/// Single-consumer source of batches over a fixed record list.
class BatchSource {
 public:
  virtual ~BatchSource() = default;

  virtual std::optional<Batch> next() = 0;
  /// Restarts the current pass from the first batch.
  virtual void reset() = 0;
  virtual bool augmenting() const = 0;
  virtual std::size_t num_records() const = 0;
  virtual nn::Shape sample_shape() const = 0;
  /// Records per class over one pass.
  virtual std::array<std::size_t, kNumClasses> class_counts() const = 0;
  /// Selects the epoch for streams whose order or augmentation vary per epoch.
  virtual void set_epoch(int) {}
};

/// Reads and decodes one image file; any failure becomes a Data error
/// naming the path.
ImageTensor load_image(const std::filesystem::path& path);

/// Shuffled, augmented stream over the manifest's train records. Every
/// epoch visits each record exactly once in an order derived from
/// (seed, epoch); per-sample augmentation is seeded from
/// (seed, epoch, record position), so batches are reproducible.
class TrainStream final : public BatchSource {
 public:
  TrainStream(const SplitManifest& manifest, PreprocessConfig config, std::size_t batch_size,
              std::uint64_t seed);

  void set_epoch(int epoch) override;
  int epoch() const noexcept { return epoch_; }
  const std::vector<std::size_t>& epoch_order() const noexcept { return order_; }
  const std::vector<ImageRecord>& records() const noexcept { return records_; }
  std::size_t batches_per_epoch() const noexcept;

  std::optional<Batch> next() override;
  void reset() override { cursor_ = 0; }
  bool augmenting() const override { return true; }
  std::size_t num_records() const override { return records_.size(); }
  nn::Shape sample_shape() const override;
  std::array<std::size_t, kNumClasses> class_counts() const override;

 private:
  std::vector<ImageRecord> records_;
  PreprocessConfig config_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  int epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// Augmentation-free stream in record order: pad -> resize -> normalize.
class EvalStream final : public BatchSource {
 public:
  /// `split` selects the manifest records; Unassigned is rejected.
  EvalStream(const SplitManifest& manifest, Split split, PreprocessConfig config, std::size_t batch_size);
  EvalStream(std::vector<ImageRecord> records, PreprocessConfig config, std::size_t batch_size);

  const std::vector<ImageRecord>& records() const noexcept { return records_; }

  std::optional<Batch> next() override;
  void reset() override { cursor_ = 0; }
  bool augmenting() const override { return false; }
  std::size_t num_records() const override { return records_.size(); }
  nn::Shape sample_shape() const override;
  std::array<std::size_t, kNumClasses> class_counts() const override;

 private:
  std::vector<ImageRecord> records_;
  PreprocessConfig config_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
};

}  // namespace hema
