// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hema/labels.hpp"

namespace hema {

enum class Split { Train = 0, Val = 1, Test = 2, Unassigned = 3 };

inline constexpr std::array<Split, 3> kAssignedSplits{Split::Train, Split::Val, Split::Test};

std::string_view to_string(Split split) noexcept;
std::optional<Split> split_from_string(std::string_view name) noexcept;

struct ImageRecord {
  std::filesystem::path path;
  ClassLabel label = kLabels[0];
  Split split = Split::Unassigned;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Fractions of each class assigned to (train, val, test).
using SplitRatios = std::array<double, 3>;

inline constexpr SplitRatios kDefaultRatios{0.70, 0.15, 0.15};
inline constexpr std::string_view kManifestVersion = "1";

/// Per-(label, split) tally; indexed [label id][split index].
using SplitCounts = std::array<std::array<std::size_t, 3>, kNumClasses>;

struct SplitManifest {
  std::string version{kManifestVersion};
  std::uint64_t seed = 0;
  SplitRatios ratios = kDefaultRatios;
  std::vector<ImageRecord> records;
  SplitCounts counts{};

  std::size_t count(const ClassLabel& label, Split split) const;
  std::vector<ImageRecord> records_in(Split split) const;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

/// Lists `<root>/{Benign,Early,Pre,Pro}/*` in lexicographic path order.
/// Throws NotFound, Layout (unknown folder, missing folder, non-image file)
/// or EmptyClass.
std::vector<ImageRecord> scan_corpus(const std::filesystem::path& root);

bool has_image_extension(const std::filesystem::path& path);

/// Seeded per-class shuffle followed by largest-remainder apportionment,
/// so every (label, split) tally is within 1 of ratio * class total.
SplitManifest stratified_split(std::span<const ImageRecord> records, const SplitRatios& ratios,
                               std::uint64_t seed);

void validate_ratios(const SplitRatios& ratios);

/// Checks every SplitManifest invariant; throws Manifest with the reason.
void validate_manifest(const SplitManifest& manifest);

std::string manifest_to_json(const SplitManifest& manifest);
SplitManifest manifest_from_json(std::string_view text);

void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest load_manifest(const std::filesystem::path& path);

}  // namespace hema
