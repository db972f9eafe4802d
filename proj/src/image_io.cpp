// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

#include "difom/binary_io.hpp"
#include "difom/errors.hpp"

namespace difom {

namespace fs = std::filesystem;

namespace {

cv::Mat read_8bit(const fs::path& path, int channels) {
  if (!fs::exists(path)) throw MissingInputError("image not found: " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw FormatError(FormatError::Kind::Io, "cannot decode image " + path.string());
  if (m.depth() != CV_8U) throw FormatError(FormatError::Kind::Invalid, path.string() + " is not an 8-bit image");
  if (m.channels() != channels) {
    throw FormatError(FormatError::Kind::Invalid, path.string() + " has " + std::to_string(m.channels()) +
                                                      " channels, expected " + std::to_string(channels));
  }
  return m;
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_mat(const fs::path& path, const cv::Mat& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp" + path.extension().string();
  if (!cv::imwrite(tmp.string(), m)) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
  fs::rename(tmp, path);
}

}  // namespace

FeatureMap read_gray(const fs::path& path) {
  const cv::Mat m = read_8bit(path, 1);
  FeatureMap out(1, static_cast<std::size_t>(m.rows), static_cast<std::size_t>(m.cols));
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) out.at(0, y, x) = m.at<std::uint8_t>(y, x) / 255.0f;
  return out;
}

void write_gray(const fs::path& path, const FeatureMap& map) {
  if (map.channels() != 1) throw DimensionError("channels", "write_gray needs a 1-channel map");
  cv::Mat m(static_cast<int>(map.height()), static_cast<int>(map.width()), CV_8UC1);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) m.at<std::uint8_t>(y, x) = to_byte(map.at(0, y, x));
  write_mat(path, m);
}

FeatureMap read_rgb(const fs::path& path) {
  const cv::Mat m = read_8bit(path, 3);
  FeatureMap out(3, static_cast<std::size_t>(m.rows), static_cast<std::size_t>(m.cols));
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const auto& px = m.at<cv::Vec3b>(y, x);  // BGR
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = px[2 - c] / 255.0f;
    }
  return out;
}

void write_rgb(const fs::path& path, const FeatureMap& map) {
  if (map.channels() != 3) throw DimensionError("channels", "write_rgb needs a 3-channel map");
  cv::Mat m(static_cast<int>(map.height()), static_cast<int>(map.width()), CV_8UC3);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      auto& px = m.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) px[2 - c] = to_byte(map.at(c, y, x));
    }
  write_mat(path, m);
}

bool is_mask_file(const fs::path& path) {
  const std::string ext = path.extension().string();
  return ext == ".pgm" || ext == ".png";
}

void write_sample(const fs::path& dir, const SegmentationSample& s) {
  write_rgb(dir / "images" / (s.id + ".ppm"), s.image);
  write_gray(dir / "masks" / (s.id + ".pgm"), s.mask);
}

std::vector<SegmentationSample> read_samples(const fs::path& dir) {
  const fs::path images = dir / "images", masks = dir / "masks";
  if (!fs::is_directory(images)) throw MissingInputError("image directory not found: " + images.string());
  if (!fs::is_directory(masks)) throw MissingInputError("mask directory not found: " + masks.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(images)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".ppm" || ext == ".png")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw MissingInputError("no images found in " + images.string());
  std::vector<SegmentationSample> out;
  for (const fs::path& f : files) {
    const std::string id = f.stem().string();
    fs::path mask = masks / (id + ".pgm");
    if (!fs::exists(mask)) mask = masks / (id + ".png");
    SegmentationSample s{id, read_rgb(f), read_gray(mask)};
    for (float& v : s.mask.data()) v = v >= 128.0f / 255.0f ? 1.0f : 0.0f;
    validate_sample(s);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace difom
