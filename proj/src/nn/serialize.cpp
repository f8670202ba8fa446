// SPDX-License-Identifier: Apache-2.0
#include "hema/nn/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <map>

#include "hema/error.hpp"
#include "hema/io.hpp"

namespace hema::nn {

namespace {

constexpr std::string_view kMagic = "HEMAWTS1";

static_assert(sizeof(float) == 4);

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.append(buf, 4);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::Integrity, "weight file truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string backbone_tag(const ModelGraph& model) { return model.name() + "_backbone"; }

bool is_head(const ModelGraph& model, const Parameter& p) {
  return p.name.rfind(model.head().name() + "/", 0) == 0;
}

}  // namespace

std::string encode_arrays(std::string_view tag, const std::vector<NamedArray>& arrays) {
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(tag.size()));
  out.append(tag);
  put_u32(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    put_u32(out, static_cast<std::uint32_t>(a.name.size()));
    out.append(a.name);
    put_u32(out, static_cast<std::uint32_t>(a.shape.size()));
    for (int d : a.shape) put_u32(out, static_cast<std::uint32_t>(d));
    const auto* raw = reinterpret_cast<const char*>(a.values.data());
    out.append(raw, a.values.size() * sizeof(float));
  }
  return out;
}

DecodedArrays decode_arrays(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != kMagic) throw Error(ErrorCode::Integrity, "not a weight file (bad magic)");
  DecodedArrays out;
  out.tag = std::string(r.take(r.u32()));
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = std::string(r.take(r.u32()));
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw Error(ErrorCode::Integrity, "implausible rank for " + a.name);
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.u32();
      a.shape.push_back(static_cast<int>(d));
      n *= d;
    }
    const auto raw = r.take(n * sizeof(float));
    a.values.resize(n);
    std::memcpy(a.values.data(), raw.data(), raw.size());
    out.arrays.push_back(std::move(a));
  }
  if (!r.done()) throw Error(ErrorCode::Integrity, "trailing bytes in weight file");
  return out;
}

std::string serialize_weights(const ModelGraph& model) {
  std::vector<NamedArray> arrays;
  model.for_each_parameter([&](const Parameter& p) { arrays.push_back({p.name, p.shape, {p.value.begin(), p.value.end()}}); });
  return encode_arrays(model.name(), arrays);
}

namespace {

void assign_from(ModelGraph& model, const DecodedArrays& decoded, bool include_head, ErrorCode code,
                 const std::string& source) {
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : decoded.arrays) by_name.emplace(a.name, &a);
  std::size_t used = 0;
  model.for_each_parameter([&](Parameter& p) {
    if (!include_head && is_head(model, p)) return;
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) throw Error(code, source + ": missing tensor " + p.name);
    if (it->second->shape != p.shape) throw Error(code, source + ": shape mismatch for " + p.name);
    p.value.assign(it->second->values.begin(), it->second->values.end());
    ++used;
  });
  if (used != by_name.size()) {
    throw Error(code, source + ": file holds " + std::to_string(by_name.size()) + " tensors, model uses " +
                          std::to_string(used));
  }
}

}  // namespace

void deserialize_weights(ModelGraph& model, std::string_view bytes) {
  const auto decoded = decode_arrays(bytes);
  if (decoded.tag != model.name()) {
    throw Error(ErrorCode::Integrity, "weights are for '" + decoded.tag + "', model is '" + model.name() + "'");
  }
  assign_from(model, decoded, true, ErrorCode::Integrity, "weights");
}

void load_backbone(ModelGraph& model, const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::Asset, "pretrained backbone weights not found: " + path.string());
  }
  DecodedArrays decoded;
  try {
    decoded = decode_arrays(read_file(path));
  } catch (const Error& e) {
    throw Error(ErrorCode::Asset, path.string() + ": " + e.what());
  }
  if (decoded.tag != backbone_tag(model)) {
    throw Error(ErrorCode::Asset, path.string() + ": asset is '" + decoded.tag + "', expected '" +
                                      backbone_tag(model) + "'");
  }
  assign_from(model, decoded, false, ErrorCode::Asset, path.string());
}

std::string serialize_backbone(const ModelGraph& model) {
  std::vector<NamedArray> arrays;
  model.for_each_parameter([&](const Parameter& p) {
    if (!is_head(model, p)) arrays.push_back({p.name, p.shape, {p.value.begin(), p.value.end()}});
  });
  return encode_arrays(backbone_tag(model), arrays);
}

}  // namespace hema::nn
