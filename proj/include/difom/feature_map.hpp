// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "difom/tensor.hpp"

namespace difom {

/// Real H x W x C feature grid stored channel-major (C, H, W).
template <typename T>
class BasicFeatureMap {
 public:
  BasicFeatureMap() = default;
  BasicFeatureMap(std::size_t channels, std::size_t height, std::size_t width, T fill = T{})
      : channels_(channels), height_(height), width_(width), data_(channels * height * width, fill) {}

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& at(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * height_ + y) * width_ + x]; }
  T at(std::size_t c, std::size_t y, std::size_t x) const { return data_[(c * height_ + y) * width_ + x]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::span<T> channel(std::size_t c) { return std::span<T>(data_).subspan(c * plane(), plane()); }
  std::span<const T> channel(std::size_t c) const {
    return std::span<const T>(data_).subspan(c * plane(), plane());
  }

  template <typename U>
  BasicFeatureMap<U> cast() const {
    BasicFeatureMap<U> out(channels_, height_, width_);
    std::transform(data_.begin(), data_.end(), out.data().begin(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool operator==(const BasicFeatureMap&) const = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

using FeatureMap = BasicFeatureMap<float>;
using FeatureMap64 = BasicFeatureMap<double>;

/// (1, C, H, W) tensor view of a feature map.
inline Tensor4 to_tensor(const FeatureMap& m) {
  Tensor4 t({1, m.channels(), m.height(), m.width()});
  std::copy(m.data().begin(), m.data().end(), t.data().begin());
  return t;
}

/// Stacks equally-shaped maps into an (N, C, H, W) batch.
Tensor4 stack_maps(std::span<const FeatureMap* const> maps);

/// Non-differentiable half-pixel bilinear resize, evaluated in double precision.
FeatureMap resize_bilinear(const FeatureMap& m, std::size_t height, std::size_t width);

}  // namespace difom
