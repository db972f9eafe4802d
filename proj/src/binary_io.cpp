// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

namespace difom {

const char* to_string(FormatError::Kind kind) {
  switch (kind) {
    case FormatError::Kind::Io: return "io";
    case FormatError::Kind::BadMagic: return "bad-magic";
    case FormatError::Kind::UnsupportedVersion: return "unsupported-version";
    case FormatError::Kind::Truncated: return "truncated";
    case FormatError::Kind::NonFinite: return "non-finite";
    case FormatError::Kind::ZeroDim: return "zero-dim";
    case FormatError::Kind::Invalid: return "invalid";
    case FormatError::Kind::Mismatch: return "mismatch";
  }
  return "unknown";
}

void ByteReader::need(std::size_t n) const {
  if (n > remaining()) {
    throw FormatError(FormatError::Kind::Truncated, "unexpected end of data at byte " + std::to_string(pos_) +
                                                        " (need " + std::to_string(n) + ", have " +
                                                        std::to_string(remaining()) + ")");
  }
}

std::uint32_t ByteReader::u32() {
  need(4);
  const std::uint8_t* p = bytes_.data() + pos_;
  pos_ += 4;
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::string ByteReader::str(std::size_t max_len) {
  const std::uint32_t len = u32();
  if (len > max_len) {
    throw FormatError(FormatError::Kind::Invalid,
                      "string length " + std::to_string(len) + " exceeds limit " + std::to_string(max_len));
  }
  need(len);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
  pos_ += len;
  return s;
}

void ByteReader::expect_magic(std::string_view magic) {
  need(magic.size());
  if (std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0) {
    throw FormatError(FormatError::Kind::BadMagic, "bad magic, expected \"" + std::string(magic) + "\"");
  }
  pos_ += magic.size();
}

void ByteReader::f32_array(std::size_t count, std::vector<float>& out) {
  if (count > remaining() / 4) {
    throw FormatError(FormatError::Kind::Truncated, "payload of " + std::to_string(count) +
                                                        " floats exceeds the " + std::to_string(remaining()) +
                                                        " bytes left");
  }
  const std::size_t start = out.size();
  out.resize(start + count);
  for (std::size_t i = 0; i < count; ++i) out[start + i] = f32();
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  raw(s);
}

void ByteWriter::raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

void ByteWriter::f32_array(std::span<const float> values) {
  bytes_.reserve(bytes_.size() + 4 * values.size());
  for (float v : values) f32(v);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw FormatError(FormatError::Kind::Io, "read failure on " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw FormatError(FormatError::Kind::Io, "write failure on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw FormatError(FormatError::Kind::Io, "cannot rename into " + path.string());
  }
}

}  // namespace difom
