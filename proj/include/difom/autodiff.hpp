// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "difom/tensor.hpp"

namespace difom {

/// A named trainable tensor. `grad` always has the shape of `value`.
struct Parameter {
  Parameter(std::string name, Tensor4 value);

  std::string name;
  Tensor4 value;
  Tensor4 grad;
  bool trainable = true;
  /// Set by Tape::backward for every parameter on the tape, cleared by the optimizer.
  bool grad_ready = false;

  void zero_grad();
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the tape is
/// cleared. References returned by value() stay valid as the tape grows.
class Var {
 public:
  Var() = default;
  const Tensor4& value() const;
  const Shape4& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records differentiable operations in execution order and replays them in
/// reverse for backpropagation. Confined to one thread.
class Tape {
 public:
  /// `grads[i]` is null when input i does not require a gradient. Implementations
  /// must accumulate (+=) into the non-null entries.
  using BackwardFn = std::function<void(const Tensor4& out_grad, std::span<Tensor4* const> grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor4 value);
  /// Leaf that receives a gradient readable through grad().
  Var variable(Tensor4 value);
  /// Leaf bound to a parameter; one node per parameter per tape.
  Var param(Parameter& p);
  Var record(Tensor4 value, std::vector<Var> inputs, BackwardFn backward);

  /// Reverse pass from a scalar loss. Writes dLoss/dParam into every trainable
  /// parameter on the tape and zeros into frozen ones. A tape can be consumed once.
  void backward(Var loss);
  void clear();

  const Tensor4& value(const Var& v) const;
  /// Gradient of the loss w.r.t. `v` after backward(); zeros if `v` did not require one.
  const Tensor4& grad(const Var& v) const;
  bool requires_grad(const Var& v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }
  /// Ids of nodes in the order backward() visited them (last call).
  const std::vector<std::size_t>& backward_order() const noexcept { return visit_order_; }

 private:
  struct Node {
    Tensor4 value;
    Tensor4 grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  void check_owned(const Var& v) const;
  void check_open() const;

  // deque: values stay at stable addresses while the tape grows.
  std::deque<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> param_nodes_;
  std::vector<std::size_t> visit_order_;
  bool consumed_ = false;
};

// Differentiable operations. All inputs must live on the same tape.

/// Cross-correlation. weights (C_out, C_in, k, k), bias (1, C_out, 1, 1).
Var conv2d(Var input, Var weights, Var bias, std::size_t stride, std::size_t padding);
/// Half-pixel (align_corners = false) bilinear resampling.
Var bilinear_resize(Var input, std::size_t target_h, std::size_t target_w);
Var maxpool2(Var input);
/// Nearest-neighbour x2 upsampling.
Var upsample2(Var input);
Var sigmoid(Var input);
Var relu(Var input);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var concat_channels(const std::vector<Var>& inputs);
Var sum(Var input);
Var mean(Var input);
/// Σ weights[i] * inputs[i]; all inputs share one shape.
Var weighted_sum(const std::vector<Var>& inputs, const std::vector<double>& weights);

/// Free function form of Tape::backward.
void backward(Tape& tape, Var loss);

/// Interpolation taps along one axis for half-pixel bilinear resampling; shared
/// with the non-differentiable resizers in teacher fusion and augmentation.
struct LinearTap {
  std::size_t i0 = 0;
  std::size_t i1 = 0;
  double w0 = 1.0;
  double w1 = 0.0;
};
std::vector<LinearTap> linear_taps(std::size_t in_size, std::size_t out_size);

}  // namespace difom
