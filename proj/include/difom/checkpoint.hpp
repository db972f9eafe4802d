// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "difom/autodiff.hpp"
#include "difom/binary_io.hpp"

namespace difom {

// "DFCK" checkpoint layout, little-endian:
//   magic "DFCK" | version u32 | parameter count u32
//   per parameter: name (u32 length + UTF-8) | shape 4 x u32 (N, C, H, W) | f32 payload
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor4 value;
};

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);
/// Copies stored values into `params` by name. Every parameter must be present
/// with an identical shape.
void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params);

}  // namespace difom
