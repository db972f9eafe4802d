// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "difom/feature_map.hpp"
#include "difom/sample.hpp"

namespace difom {

/// 8-bit single-channel image as a 1 x H x W map with values v / 255.
FeatureMap read_gray(const std::filesystem::path& path);
/// Writes round(clamp(v, 0, 1) * 255); the format follows the extension (.pgm, .png).
void write_gray(const std::filesystem::path& path, const FeatureMap& map);
/// 8-bit colour image as a 3 x H x W map in RGB order.
FeatureMap read_rgb(const std::filesystem::path& path);
void write_rgb(const std::filesystem::path& path, const FeatureMap& map);

bool is_mask_file(const std::filesystem::path& path);

/// Writes <dir>/images/<id>.ppm and <dir>/masks/<id>.pgm.
void write_sample(const std::filesystem::path& dir, const SegmentationSample& sample);
/// Reads every image/mask pair under <dir>; masks are binarised at 128.
std::vector<SegmentationSample> read_samples(const std::filesystem::path& dir);

}  // namespace difom
