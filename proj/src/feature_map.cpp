// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/feature_map.hpp"

#include "difom/autodiff.hpp"

namespace difom {

Tensor4 stack_maps(std::span<const FeatureMap* const> maps) {
  if (maps.empty()) throw std::invalid_argument("stack_maps: no maps");
  const FeatureMap& first = *maps.front();
  Tensor4 t({maps.size(), first.channels(), first.height(), first.width()});
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const FeatureMap& m = *maps[i];
    if (m.channels() != first.channels()) throw DimensionError("channels", "stack_maps: channel mismatch");
    if (m.height() != first.height()) throw DimensionError("height", "stack_maps: height mismatch");
    if (m.width() != first.width()) throw DimensionError("width", "stack_maps: width mismatch");
    std::copy(m.data().begin(), m.data().end(), t.data().begin() + static_cast<std::ptrdiff_t>(i * m.size()));
  }
  return t;
}

FeatureMap resize_bilinear(const FeatureMap& m, std::size_t height, std::size_t width) {
  if (height == 0) throw DimensionError("height", "resize target height must be >= 1");
  if (width == 0) throw DimensionError("width", "resize target width must be >= 1");
  if (m.height() == 0 || m.width() == 0) throw DimensionError("height", "cannot resize an empty map");
  if (height == m.height() && width == m.width()) return m;
  const auto ty = linear_taps(m.height(), height);
  const auto tx = linear_taps(m.width(), width);
  FeatureMap out(m.channels(), height, width);
  for (std::size_t c = 0; c < m.channels(); ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      const LinearTap& a = ty[y];
      for (std::size_t x = 0; x < width; ++x) {
        const LinearTap& b = tx[x];
        const double top = b.w0 * m.at(c, a.i0, b.i0) + b.w1 * m.at(c, a.i0, b.i1);
        const double bot = b.w0 * m.at(c, a.i1, b.i0) + b.w1 * m.at(c, a.i1, b.i1);
        out.at(c, y, x) = static_cast<float>(a.w0 * top + a.w1 * bot);
      }
    }
  }
  return out;
}

}  // namespace difom
