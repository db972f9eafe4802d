// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/sample.hpp"

#include <stdexcept>

namespace difom {

void validate_sample(const SegmentationSample& s) {
  if (s.image.channels() != 3) throw DimensionError("channels", "sample " + s.id + ": image must have 3 channels");
  if (s.image.height() == 0 || s.image.width() == 0) throw DimensionError("height", "sample " + s.id + ": empty image");
  if (s.mask.channels() != 1) throw DimensionError("channels", "sample " + s.id + ": mask must have 1 channel");
  if (s.mask.height() != s.image.height()) throw DimensionError("height", "sample " + s.id + ": mask/image height");
  if (s.mask.width() != s.image.width()) throw DimensionError("width", "sample " + s.id + ": mask/image width");
  for (float v : s.image.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("sample " + s.id + ": image values must lie in [0, 1]");
  }
  for (float v : s.mask.data()) {
    if (v != 0.0f && v != 1.0f) throw std::invalid_argument("sample " + s.id + ": mask values must be 0 or 1");
  }
}

}  // namespace difom
