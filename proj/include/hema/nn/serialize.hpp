// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hema/nn/graph.hpp"

namespace hema::nn {

/// One named float32 array as stored on disk.
struct NamedArray {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

/// Weight file layout (little-endian):
///   "HEMAWTS1" | u32 tag_len | tag | u32 count |
///   count x ( u32 name_len | name | u32 rank | u32 dims[rank] | f32 data[] )
/// The tag identifies the architecture (or "<arch>_backbone" for assets).
std::string encode_arrays(std::string_view tag, const std::vector<NamedArray>& arrays);

struct DecodedArrays {
  std::string tag;
  std::vector<NamedArray> arrays;
};

/// Throws Integrity on any structural problem.
DecodedArrays decode_arrays(std::string_view bytes);

/// Every parameter of the model, tagged with the architecture name.
std::string serialize_weights(const ModelGraph& model);

/// Overwrites all parameters; tag, names and shapes must match exactly
/// (Integrity error otherwise).
void deserialize_weights(ModelGraph& model, std::string_view bytes);

/// Loads the pretrained backbone for `model` from `path`: every
/// non-head parameter must be present with the right shape. Missing or
/// malformed files raise Asset errors.
void load_backbone(ModelGraph& model, const std::filesystem::path& path);

/// Exports the non-head parameters in backbone-asset form.
std::string serialize_backbone(const ModelGraph& model);

}  // namespace hema::nn
