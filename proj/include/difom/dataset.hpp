// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "difom/sample.hpp"

namespace difom {

struct SyntheticDataOptions {
  std::size_t count = 32;
  std::size_t size = 64;
  std::uint64_t seed = 0;
  /// Brightness offset of polyp tissue over background. 0 makes the image
  /// independent of the mask; small values give camouflaged polyps.
  double contrast = 0.25;
};

inline constexpr double kCamouflageContrast = 0.05;

/// Textured background with 1-3 soft-edged elliptical polyps per image. Masks are
/// the exact ellipse interiors (tested at pixel centres), nonempty and < 50% of pixels.
std::vector<SegmentationSample> make_synthetic_dataset(const SyntheticDataOptions& options);

struct AugmentConfig {
  std::vector<double> scales = {0.75, 1.0, 1.25};
  double flip_probability = 0.5;
};

struct AugmentDraw {
  bool hflip = false;
  bool vflip = false;
  double scale = 1.0;
};

AugmentDraw draw_augmentation(const AugmentConfig& config, std::mt19937_64& rng);
/// Flips, then rescales (bilinear image, nearest mask) and centre-crops or zero-pads back to size.
SegmentationSample apply_augmentation(const SegmentationSample& sample, const AugmentDraw& draw);
SegmentationSample augment(const SegmentationSample& sample, const AugmentConfig& config, std::mt19937_64& rng);

/// The geometric part of a draw applied to a map of any size: flips, bilinear
/// rescale, zero pad or crop back to the original grid.
FeatureMap transform_map(const FeatureMap& m, const AugmentDraw& draw);

FeatureMap flip_horizontal(const FeatureMap& m);
FeatureMap flip_vertical(const FeatureMap& m);
FeatureMap resize_nearest(const FeatureMap& m, std::size_t height, std::size_t width);
/// Centre crop or zero pad to height x width.
FeatureMap center_fit(const FeatureMap& m, std::size_t height, std::size_t width);

}  // namespace difom
