// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/checkpoint.hpp"

#include <cmath>
#include <unordered_map>

namespace difom {

namespace {
constexpr std::string_view kMagic = "DFCK";
constexpr std::size_t kMaxName = 1024;
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors) {
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.str(t.name);
    const Shape4& s = t.value.shape();
    for (std::size_t d : {s.n, s.c, s.h, s.w}) w.u32(static_cast<std::uint32_t>(d));
    w.f32_array(t.value.data());
  }
  return w.bytes();
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(FormatError::Kind::UnsupportedVersion,
                      "checkpoint version " + std::to_string(version) + " is not supported");
  }
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str(kMaxName);
    if (t.name.empty()) throw FormatError(FormatError::Kind::Invalid, "empty parameter name");
    Shape4 s{r.u32(), r.u32(), r.u32(), r.u32()};
    if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0) {
      throw FormatError(FormatError::Kind::ZeroDim, "parameter " + t.name + " has a zero dimension");
    }
    // Each dim < 2^32, so the product of two fits; check against the bytes left before multiplying on.
    const std::size_t limit = r.remaining() / 4;
    std::size_t numel = s.n * s.c;
    if (numel > limit || (numel *= s.h) > limit || (numel *= s.w) > limit) {
      throw FormatError(FormatError::Kind::Truncated, "payload of " + t.name + " is truncated");
    }
    std::vector<float> data;
    r.f32_array(numel, data);
    for (float v : data) {
      if (!std::isfinite(v)) throw FormatError(FormatError::Kind::NonFinite, "parameter " + t.name + " is not finite");
    }
    t.value = Tensor4::from_data(s, std::move(data));
    out.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw FormatError(FormatError::Kind::Invalid, "trailing bytes after last parameter");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(params.size());
  for (const Parameter* p : params) tensors.push_back({p->name, p->value});
  write_file_atomic(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params) {
  auto tensors = read_checkpoint(path);
  std::unordered_map<std::string, Tensor4*> by_name;
  for (auto& t : tensors) by_name[t.name] = &t.value;
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw FormatError(FormatError::Kind::Mismatch, "checkpoint lacks parameter " + p->name);
    if (!(it->second->shape() == p->value.shape())) {
      throw FormatError(FormatError::Kind::Mismatch, "parameter " + p->name + " has shape " +
                                                         it->second->shape().str() + " in checkpoint, model expects " +
                                                         p->value.shape().str());
    }
  }
  for (Parameter* p : params) p->value = *by_name[p->name];
}

}  // namespace difom
