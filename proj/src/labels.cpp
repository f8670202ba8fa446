// SPDX-License-Identifier: Apache-2.0
#include "hema/labels.hpp"

#include <string>

#include "hema/error.hpp"

namespace hema {

std::optional<ClassLabel> label_from_folder(std::string_view folder) noexcept {
  for (const auto& label : kLabels) {
    if (label.folder_name == folder) return label;
  }
  return std::nullopt;
}

std::optional<ClassLabel> label_from_display(std::string_view display) noexcept {
  for (const auto& label : kLabels) {
    if (label.display_name == display) return label;
  }
  return std::nullopt;
}

const ClassLabel& label_at(int id) {
  if (id < 0 || id >= static_cast<int>(kNumClasses)) {
    throw Error(ErrorCode::Argument, "class id out of range: " + std::to_string(id));
  }
  return kLabels[static_cast<std::size_t>(id)];
}

}  // namespace hema
