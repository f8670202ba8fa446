// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hema {

/// Per-epoch learning curves; all four series share one length.
struct TrainingHistory {
  std::vector<double> train_accuracy;
  std::vector<double> train_loss;
  std::vector<double> val_accuracy;
  std::vector<double> val_loss;

  std::size_t epochs() const noexcept { return train_accuracy.size(); }
  /// Throws Argument unless the series are non-empty, equal-length and in range.
  void validate() const;

  friend bool operator==(const TrainingHistory&, const TrainingHistory&) = default;
};

inline constexpr std::string_view kHistoryCsvHeader = "epoch,train_accuracy,train_loss,val_accuracy,val_loss";

/// Header plus one row per epoch (epochs numbered from 1); values use the
/// shortest round-trip decimal form.
std::string history_to_csv(const TrainingHistory& history);
TrainingHistory history_from_csv(std::string_view csv);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace hema
