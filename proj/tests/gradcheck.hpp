// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

// Central finite-difference oracle for tape operations. Test-only.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "difom/autodiff.hpp"

namespace difom::testing {

inline Tensor4 random_tensor(Shape4 s, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor4 t(s);
  for (float& v : t.data()) v = u(rng);
  return t;
}

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;  // worst over all leaves
  std::size_t checked = 0;
};

/// Norm-wise relative error between analytic and central-difference gradients
/// of  L = Σ out ⊙ R  (R fixed random) w.r.t. each leaf. At most `max_entries`
/// randomly chosen entries per leaf are perturbed.
inline GradCheckResult grad_check(const Builder& build, std::vector<Tensor4> leaves, std::mt19937_64& rng,
                                  double eps = 1e-3, std::size_t max_entries = 96) {
  Tensor4 projection;
  auto forward_loss = [&](const std::vector<Tensor4>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& x : xs) vars.push_back(tape.constant(x));
    Var out = build(tape, vars);
    double l = 0.0;
    for (std::size_t i = 0; i < out.value().numel(); ++i)
      l += static_cast<double>(out.value().data()[i]) * projection.data()[i];
    return l;
  };

  Tape tape;
  std::vector<Var> vars;
  for (const auto& x : leaves) vars.push_back(tape.variable(x));
  Var out = build(tape, vars);
  projection = random_tensor(out.shape(), rng);
  Var loss = out.value().is_scalar() ? scale(out, projection.data()[0])
                                     : sum(mul(out, tape.constant(projection)));
  tape.backward(loss);

  GradCheckResult result;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const Tensor4& analytic = tape.grad(vars[li]);
    std::vector<std::size_t> idx(leaves[li].numel());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    if (idx.size() > max_entries) idx.resize(max_entries);

    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i : idx) {
      std::vector<Tensor4> plus = leaves, minus = leaves;
      plus[li].data()[i] += static_cast<float>(eps);
      minus[li].data()[i] -= static_cast<float>(eps);
      const double h = static_cast<double>(plus[li].data()[i]) - minus[li].data()[i];
      const double numeric = (forward_loss(plus) - forward_loss(minus)) / h;
      const double a = analytic.data()[i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-6});
    result.max_relative_error = std::max(result.max_relative_error, std::sqrt(diff2) / denom);
    result.checked += idx.size();
  }
  return result;
}

}  // namespace difom::testing
