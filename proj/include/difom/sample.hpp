// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "difom/feature_map.hpp"

namespace difom {

/// One training or evaluation example.
struct SegmentationSample {
  std::string id;
  FeatureMap image;  // 3 x H x W, values in [0, 1]
  FeatureMap mask;   // 1 x H x W, values exactly 0 or 1
};

/// Throws std::invalid_argument unless the sample satisfies the invariants above.
void validate_sample(const SegmentationSample& sample);

}  // namespace difom
