// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace difom {

/// Thrown when tensor shapes disagree. `axis()` names the offending axis
/// ("batch", "channels", "height", "width", or an op-specific name).
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::string axis, const std::string& what)
      : std::invalid_argument(what), axis_(std::move(axis)) {}
  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

struct Shape4 {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t numel() const noexcept { return n * c * h * w; }
  std::size_t plane() const noexcept { return h * w; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

/// Dense NCHW float tensor, row-major.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, float fill = 0.0f);

  /// Builds a tensor from external data; rejects size mismatch and NaN/Inf.
  static Tensor4 from_data(Shape4 shape, std::vector<float> data);
  static Tensor4 scalar(float v) { return Tensor4({1, 1, 1, 1}, v); }

  const Shape4& shape() const noexcept { return shape_; }
  std::size_t numel() const noexcept { return data_.size(); }
  bool is_scalar() const noexcept { return data_.size() == 1; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::vector<float>& storage() noexcept { return data_; }

  float& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  float at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  float item() const;

  void fill(float v);
  bool all_finite() const noexcept;

 private:
  Shape4 shape_{};
  std::vector<float> data_;
};

/// Throws DimensionError naming the first axis on which `a` and `b` differ.
void require_same_shape(const Shape4& a, const Shape4& b, const char* op);

}  // namespace difom
