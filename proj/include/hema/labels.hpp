// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace hema {

inline constexpr std::size_t kNumClasses = 4;

/// One of the four blood-cell categories. `id` is the canonical index used
/// for one-hot targets and softmax outputs; it follows the alphabetical order
/// of the corpus folder names.
struct ClassLabel {
  int id;
  std::string_view folder_name;
  std::string_view display_name;

  friend constexpr bool operator==(const ClassLabel& a, const ClassLabel& b) {
    return a.id == b.id;
  }
};

inline constexpr std::array<ClassLabel, kNumClasses> kLabels{{
    {0, "Benign", "Benign"},
    {1, "Early", "Early Pre-B"},
    {2, "Pre", "Pre-B"},
    {3, "Pro", "Pro-B"},
}};

std::optional<ClassLabel> label_from_folder(std::string_view folder) noexcept;
std::optional<ClassLabel> label_from_display(std::string_view display) noexcept;
const ClassLabel& label_at(int id);

}  // namespace hema
