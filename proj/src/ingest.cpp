// SPDX-License-Identifier: Apache-2.0
#include "hema/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "hema/error.hpp"
#include "hema/io.hpp"
#include "hema/random.hpp"

namespace hema {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kImageExtensions{".jpg", ".jpeg", ".png", ".bmp",
                                                           ".tif", ".tiff", ".webp"};

bool is_hidden(const fs::path& p) {
  const auto name = p.filename().string();
  return !name.empty() && name.front() == '.';
}

std::size_t split_index(Split s) { return static_cast<std::size_t>(s); }

// Largest-remainder apportionment of n items over the three ratios; ties in
// the fractional part go to the earlier split.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double quota = ratios[s] * static_cast<double>(n);
    const double whole = std::floor(quota + 1e-9);
    counts[s] = static_cast<std::size_t>(whole);
    frac[s] = std::max(0.0, quota - whole);
    assigned += counts[s];
  }
  while (assigned > n) {
    // Only reachable through the epsilon guard; take back from the largest.
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3) {
    if (ratios[order[k]] > 0.0) {
      ++counts[order[k]];
      ++assigned;
    }
  }
  return counts;
}

SplitCounts tally(std::span<const ImageRecord> records) {
  SplitCounts counts{};
  for (const auto& r : records) {
    if (r.split == Split::Unassigned) continue;
    ++counts[static_cast<std::size_t>(r.label.id)][split_index(r.split)];
  }
  return counts;
}

[[noreturn]] void manifest_error(const std::string& reason) {
  throw Error(ErrorCode::Manifest, "manifest: " + reason);
}

}  // namespace

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "unassigned";
}

std::optional<Split> split_from_string(std::string_view name) noexcept {
  for (Split s : {Split::Train, Split::Val, Split::Test, Split::Unassigned}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::size_t SplitManifest::count(const ClassLabel& label, Split split) const {
  if (split == Split::Unassigned) return 0;
  return counts[static_cast<std::size_t>(label.id)][split_index(split)];
}

std::vector<ImageRecord> SplitManifest::records_in(Split split) const {
  std::vector<ImageRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [split](const ImageRecord& r) { return r.split == split; });
  return out;
}

bool has_image_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(kImageExtensions.begin(), kImageExtensions.end(), ext) != kImageExtensions.end();
}

std::vector<ImageRecord> scan_corpus(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::NotFound, "corpus root not found: " + root.string());
  }

  std::array<bool, kNumClasses> seen{};
  std::vector<ImageRecord> records;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (is_hidden(entry.path())) continue;
    const auto name = entry.path().filename().string();
    const auto label = label_from_folder(name);
    if (!entry.is_directory() || !label) {
      throw Error(ErrorCode::Layout, "unrecognized entry in corpus root: " + name);
    }
    seen[static_cast<std::size_t>(label->id)] = true;

    std::size_t images = 0;
    for (const auto& file : fs::directory_iterator(entry.path())) {
      if (is_hidden(file.path())) continue;
      if (!file.is_regular_file() || !has_image_extension(file.path())) {
        throw Error(ErrorCode::Layout, "non-image entry in class folder: " + file.path().string());
      }
      records.push_back({file.path(), *label, Split::Unassigned});
      ++images;
    }
    if (images == 0) {
      throw Error(ErrorCode::EmptyClass, "class folder has no images: " + name);
    }
  }
  for (const auto& label : kLabels) {
    if (!seen[static_cast<std::size_t>(label.id)]) {
      throw Error(ErrorCode::Layout, "missing class folder: " + std::string(label.folder_name));
    }
  }

  std::sort(records.begin(), records.end(), [](const ImageRecord& a, const ImageRecord& b) {
    return a.path.generic_string() < b.path.generic_string();
  });
  return records;
}

void validate_ratios(const SplitRatios& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!std::isfinite(r) || r < 0.0) {
      throw Error(ErrorCode::Config, "split ratios must be finite and non-negative");
    }
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::Config, "split ratios must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

SplitManifest stratified_split(std::span<const ImageRecord> records, const SplitRatios& ratios,
                               std::uint64_t seed) {
  validate_ratios(ratios);
  const auto nonzero =
      static_cast<std::size_t>(std::count_if(ratios.begin(), ratios.end(), [](double r) { return r > 0.0; }));

  SplitManifest manifest;
  manifest.seed = seed;
  manifest.ratios = ratios;
  manifest.records.assign(records.begin(), records.end());
  std::sort(manifest.records.begin(), manifest.records.end(),
            [](const ImageRecord& a, const ImageRecord& b) {
              return a.path.generic_string() < b.path.generic_string();
            });

  for (const auto& label : kLabels) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
      if (manifest.records[i].label == label) members.push_back(i);
    }
    if (members.size() < std::max<std::size_t>(nonzero, 1)) {
      throw Error(ErrorCode::InsufficientData,
                  "class " + std::string(label.folder_name) + " has " + std::to_string(members.size()) +
                      " images, fewer than the " + std::to_string(nonzero) + " non-empty splits");
    }

    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(label.id)}));
    shuffle(std::span<std::size_t>(members), rng);

    const auto sizes = apportion(members.size(), ratios);
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < sizes[s]; ++k) {
        manifest.records[members[cursor++]].split = kAssignedSplits[s];
      }
    }
  }
  manifest.counts = tally(manifest.records);
  return manifest;
}

void validate_manifest(const SplitManifest& manifest) {
  if (manifest.version != kManifestVersion) {
    manifest_error("version mismatch: expected " + std::string(kManifestVersion) + ", got " +
                   manifest.version);
  }
  try {
    validate_ratios(manifest.ratios);
  } catch (const Error& e) {
    manifest_error(std::string("invalid ratios: ") + e.what());
  }

  std::set<std::string> paths;
  for (const auto& r : manifest.records) {
    if (r.split == Split::Unassigned) {
      manifest_error("invariant violation: unassigned record " + r.path.string());
    }
    if (!paths.insert(r.path.generic_string()).second) {
      manifest_error("invariant violation: record appears in more than one split: " + r.path.string());
    }
  }

  const auto observed = tally(manifest.records);
  if (observed != manifest.counts) {
    manifest_error("tally mismatch: counts do not match records");
  }
  for (const auto& label : kLabels) {
    const auto& row = observed[static_cast<std::size_t>(label.id)];
    const double total = static_cast<double>(row[0] + row[1] + row[2]);
    for (std::size_t s = 0; s < 3; ++s) {
      const double expected = manifest.ratios[s] * total;
      if (std::abs(static_cast<double>(row[s]) - expected) > 1.0 + 1e-9) {
        manifest_error("tally mismatch: " + std::string(label.folder_name) + "/" +
                       std::string(to_string(kAssignedSplits[s])) + " has " + std::to_string(row[s]) +
                       ", expected about " + std::to_string(expected));
      }
    }
  }
}

std::string manifest_to_json(const SplitManifest& manifest) {
  json records = json::array();
  for (const auto& r : manifest.records) {
    records.push_back({{"path", r.path.generic_string()},
                       {"label", std::string(r.label.folder_name)},
                       {"split", std::string(to_string(r.split))}});
  }
  json counts = json::object();
  for (const auto& label : kLabels) {
    json row = json::object();
    for (std::size_t s = 0; s < 3; ++s) {
      row[std::string(to_string(kAssignedSplits[s]))] = manifest.counts[static_cast<std::size_t>(label.id)][s];
    }
    counts[std::string(label.folder_name)] = std::move(row);
  }
  json doc = {{"version", manifest.version},
              {"seed", manifest.seed},
              {"ratios", manifest.ratios},
              {"records", std::move(records)},
              {"counts", std::move(counts)}};
  return doc.dump(2) + "\n";
}

SplitManifest manifest_from_json(std::string_view text) {
  SplitManifest m;
  try {
    const json doc = json::parse(text);
    m.version = doc.at("version").get<std::string>();
    if (m.version != kManifestVersion) {
      manifest_error("version mismatch: expected " + std::string(kManifestVersion) + ", got " + m.version);
    }
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.ratios = doc.at("ratios").get<SplitRatios>();
    for (const auto& item : doc.at("records")) {
      ImageRecord r;
      r.path = fs::path(item.at("path").get<std::string>());
      const auto folder = item.at("label").get<std::string>();
      const auto label = label_from_folder(folder);
      if (!label) manifest_error("unknown label: " + folder);
      r.label = *label;
      const auto split_name = item.at("split").get<std::string>();
      const auto split = split_from_string(split_name);
      if (!split) manifest_error("unknown split: " + split_name);
      r.split = *split;
      m.records.push_back(std::move(r));
    }
    const auto& counts = doc.at("counts");
    for (const auto& label : kLabels) {
      const auto& row = counts.at(std::string(label.folder_name));
      for (std::size_t s = 0; s < 3; ++s) {
        m.counts[static_cast<std::size_t>(label.id)][s] =
            row.at(std::string(to_string(kAssignedSplits[s]))).get<std::size_t>();
      }
    }
  } catch (const json::exception& e) {
    manifest_error(std::string("parse failure: ") + e.what());
  }
  validate_manifest(m);
  return m;
}

void save_manifest(const SplitManifest& manifest, const fs::path& path) {
  validate_manifest(manifest);
  for (const auto& r : manifest.records) {
    std::error_code ec;
    if (!fs::is_regular_file(r.path, ec)) {
      throw Error(ErrorCode::NotFound, "manifest record is not readable: " + r.path.string());
    }
  }
  const auto parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw Error(ErrorCode::Io, "manifest directory does not exist: " + parent.string());
  }
  write_file_atomic(path, manifest_to_json(manifest));
}

SplitManifest load_manifest(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Manifest, std::string("manifest: ") + e.what());
  }
  return manifest_from_json(text);
}

}  // namespace hema
