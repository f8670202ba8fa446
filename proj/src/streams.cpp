// SPDX-License-Identifier: Apache-2.0
#include "hema/streams.hpp"

#include <algorithm>
#include <numeric>

#include "hema/error.hpp"
#include "hema/io.hpp"

namespace hema {

namespace {

constexpr std::uint64_t kOrderStream = 0x6f72646572ULL;
constexpr std::uint64_t kAugmentStream = 0x6175676dULL;

void check_batch_size(std::size_t batch_size) {
  if (batch_size == 0) throw Error(ErrorCode::Config, "batch_size must be at least 1");
}

nn::Shape image_shape(const PreprocessConfig& config) {
  return {1, config.target_height, config.target_width, config.channels};
}

std::array<std::size_t, kNumClasses> count_labels(const std::vector<ImageRecord>& records) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& r : records) ++counts[static_cast<std::size_t>(r.label.id)];
  return counts;
}

void copy_into(nn::Tensor& images, int slot, const ImageTensor& img) {
  if (img.size() != images.shape().sample_size()) {
    throw Error(ErrorCode::Contract, "preprocessed image does not match the stream sample shape");
  }
  std::copy(img.data().begin(), img.data().end(), images.sample(slot));
}

}  // namespace

std::vector<float> Batch::one_hot() const {
  std::vector<float> out(labels.size() * kNumClasses, 0.0f);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i * kNumClasses + static_cast<std::size_t>(labels[i])] = 1.0f;
  }
  return out;
}

ImageTensor load_image(const std::filesystem::path& path) {
  try {
    return decode(read_file(path));
  } catch (const Error& e) {
    throw Error(ErrorCode::Data, "unreadable image file " + path.string() + ": " + e.what());
  }
}

TrainStream::TrainStream(const SplitManifest& manifest, PreprocessConfig config, std::size_t batch_size,
                         std::uint64_t seed)
    : records_(manifest.records_in(Split::Train)),
      config_(config),
      batch_size_(batch_size),
      seed_(seed) {
  config_.validate();
  check_batch_size(batch_size);
  set_epoch(0);
}

void TrainStream::set_epoch(int epoch) {
  epoch_ = epoch;
  order_.resize(records_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  Rng rng(derive_seed(seed_, {kOrderStream, static_cast<std::uint64_t>(epoch)}));
  shuffle(std::span<std::size_t>(order_), rng);
  cursor_ = 0;
}

std::size_t TrainStream::batches_per_epoch() const noexcept {
  return (records_.size() + batch_size_ - 1) / batch_size_;
}

nn::Shape TrainStream::sample_shape() const { return image_shape(config_); }

std::array<std::size_t, kNumClasses> TrainStream::class_counts() const { return count_labels(records_); }

std::optional<Batch> TrainStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t count = std::min(batch_size_, order_.size() - cursor_);
  nn::Shape shape = image_shape(config_);
  shape.n = static_cast<int>(count);

  Batch batch{nn::Tensor(shape), {}, {}};
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = order_[cursor_ + i];
    const auto& rec = records_[idx];
    Rng rng(derive_seed(seed_, {kAugmentStream, static_cast<std::uint64_t>(epoch_), idx}));
    copy_into(batch.images, static_cast<int>(i), preprocess_train(load_image(rec.path), config_, rng));
    batch.labels.push_back(rec.label.id);
    batch.record_indices.push_back(idx);
  }
  cursor_ += count;
  return batch;
}

EvalStream::EvalStream(const SplitManifest& manifest, Split split, PreprocessConfig config,
                       std::size_t batch_size)
    : config_(config), batch_size_(batch_size) {
  if (split == Split::Unassigned) {
    throw Error(ErrorCode::Argument, "eval stream needs an assigned split");
  }
  config_.validate();
  check_batch_size(batch_size);
  records_ = manifest.records_in(split);
}

EvalStream::EvalStream(std::vector<ImageRecord> records, PreprocessConfig config, std::size_t batch_size)
    : records_(std::move(records)), config_(config), batch_size_(batch_size) {
  config_.validate();
  check_batch_size(batch_size);
}

nn::Shape EvalStream::sample_shape() const { return image_shape(config_); }

std::array<std::size_t, kNumClasses> EvalStream::class_counts() const { return count_labels(records_); }

std::optional<Batch> EvalStream::next() {
  if (cursor_ >= records_.size()) return std::nullopt;
  const std::size_t count = std::min(batch_size_, records_.size() - cursor_);
  nn::Shape shape = image_shape(config_);
  shape.n = static_cast<int>(count);

  Batch batch{nn::Tensor(shape), {}, {}};
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = cursor_ + i;
    const auto& rec = records_[idx];
    copy_into(batch.images, static_cast<int>(i), preprocess_eval(load_image(rec.path), config_));
    batch.labels.push_back(rec.label.id);
    batch.record_indices.push_back(idx);
  }
  cursor_ += count;
  return batch;
}

}  // namespace hema
