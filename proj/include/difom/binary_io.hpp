// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace difom {

/// Structured failure while reading or writing one of the binary formats.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, UnsupportedVersion, Truncated, NonFinite, ZeroDim, Invalid, Mismatch };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(FormatError::Kind kind);

/// Bounds-checked little-endian cursor over an in-memory file image.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32();
  float f32();
  std::string str(std::size_t max_len);
  void expect_magic(std::string_view magic);
  /// Appends `count` floats; validates remaining length before allocating.
  void f32_array(std::size_t count, std::vector<float>& out);
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void f32(float v);
  void str(std::string_view s);
  void raw(std::string_view s);
  void f32_array(std::span<const float> values);
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace difom
