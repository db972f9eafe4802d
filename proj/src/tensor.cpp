// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace difom {

std::string Shape4::str() const {
  std::ostringstream os;
  os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

Tensor4::Tensor4(Shape4 shape, float fill) : shape_(shape), data_(shape.numel(), fill) {}

Tensor4 Tensor4::from_data(Shape4 shape, std::vector<float> data) {
  if (data.size() != shape.numel()) {
    throw DimensionError("numel", "tensor data length " + std::to_string(data.size()) +
                                      " does not match shape " + shape.str());
  }
  Tensor4 t;
  t.shape_ = shape;
  t.data_ = std::move(data);
  if (!t.all_finite()) throw std::invalid_argument("tensor data contains NaN or Inf");
  return t;
}

float Tensor4::item() const {
  if (!is_scalar()) throw DimensionError("numel", "item() on non-scalar tensor " + shape_.str());
  return data_[0];
}

void Tensor4::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor4::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void require_same_shape(const Shape4& a, const Shape4& b, const char* op) {
  auto fail = [&](const char* axis) {
    throw DimensionError(axis, std::string(op) + ": " + axis + " mismatch, " + a.str() + " vs " +
                                   b.str());
  };
  if (a.n != b.n) fail("batch");
  if (a.c != b.c) fail("channels");
  if (a.h != b.h) fail("height");
  if (a.w != b.w) fail("width");
}

}  // namespace difom
