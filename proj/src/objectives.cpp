// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace difom {

void LossWeights::validate() const {
  for (double v : {alpha1, alpha2, lambda1, lambda2, lambda3}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("loss weights must be finite and >= 0");
  }
}

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::I: return "I";
    case Phase::II: return "II";
    case Phase::III: return "III";
  }
  return "?";
}

Var dice_loss(Var pred, Var gt) {
  require_same_shape(pred.shape(), gt.shape(), "dice_loss");
  const Shape4 s = pred.shape();
  const std::size_t per = s.c * s.h * s.w;
  if (s.n == 0 || per == 0) throw DimensionError("numel", "dice_loss of an empty tensor");
  const auto p = pred.value().data();
  const auto g = gt.value().data();
  std::vector<double> inter(s.n, 0.0), denom(s.n, 0.0);
  double loss = 0.0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t i = n * per; i < (n + 1) * per; ++i) {
      inter[n] += static_cast<double>(p[i]) * g[i];
      denom[n] += static_cast<double>(p[i]) + g[i];
    }
    loss += 1.0 - (2.0 * inter[n] + kDiceSmoothing) / (denom[n] + kDiceSmoothing);
  }
  loss /= static_cast<double>(s.n);
  const Tensor4& pv = pred.value();
  const Tensor4& gv = gt.value();
  auto fn = [&pv, &gv, inter, denom, per](const Tensor4& out, std::span<Tensor4* const> grads) {
    const double upstream = out.item() / static_cast<double>(inter.size());
    for (std::size_t n = 0; n < inter.size(); ++n) {
      const double d = denom[n] + kDiceSmoothing;
      const double num = 2.0 * inter[n] + kDiceSmoothing;
      for (std::size_t i = n * per; i < (n + 1) * per; ++i) {
        // d/dp_i [-(2I + e)/(S + e)] = -(2 g_i (S + e) - (2I + e)) / (S + e)^2; symmetric in g.
        if (grads[0]) grads[0]->data()[i] += static_cast<float>(upstream * -(2.0 * gv.data()[i] * d - num) / (d * d));
        if (grads[1]) grads[1]->data()[i] += static_cast<float>(upstream * -(2.0 * pv.data()[i] * d - num) / (d * d));
      }
    }
  };
  return pred.tape().record(Tensor4::scalar(static_cast<float>(loss)), {pred, gt}, std::move(fn));
}

Var bce_loss(Var pred, Var gt) {
  require_same_shape(pred.shape(), gt.shape(), "bce_loss");
  const std::size_t count = pred.shape().numel();
  if (count == 0) throw DimensionError("numel", "bce_loss of an empty tensor");
  const auto p = pred.value().data();
  const auto g = gt.value().data();
  auto clamp = [](double v) { return std::clamp(v, kBceClamp, 1.0 - kBceClamp); };
  double loss = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double pc = clamp(p[i]);
    loss -= g[i] * std::log(pc) + (1.0 - g[i]) * std::log(1.0 - pc);
  }
  loss /= static_cast<double>(count);
  const Tensor4& pv = pred.value();
  const Tensor4& gv = gt.value();
  auto fn = [&pv, &gv, count, clamp](const Tensor4& out, std::span<Tensor4* const> grads) {
    const double upstream = out.item() / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double raw = pv.data()[i];
      const double pc = clamp(raw);
      const double gi = gv.data()[i];
      if (grads[0] && pc == raw) {
        grads[0]->data()[i] += static_cast<float>(upstream * (-gi / pc + (1.0 - gi) / (1.0 - pc)));
      }
      if (grads[1]) grads[1]->data()[i] += static_cast<float>(upstream * (std::log(1.0 - pc) - std::log(pc)));
    }
  };
  return pred.tape().record(Tensor4::scalar(static_cast<float>(loss)), {pred, gt}, std::move(fn));
}

Var distill_mse(Var student, const Tensor4& teacher) {
  require_same_shape(student.shape(), teacher.shape(), "distill_mse");
  const std::size_t count = teacher.numel();
  if (count == 0) throw DimensionError("numel", "distill_mse of an empty tensor");
  const auto s = student.value().data();
  const auto t = teacher.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(s[i]) - t[i];
    loss += d * d;
  }
  loss /= static_cast<double>(count);
  const Tensor4& sv = student.value();
  auto fn = [&sv, target = teacher, count](const Tensor4& out, std::span<Tensor4* const> grads) {
    if (!grads[0]) return;
    const double k = 2.0 * out.item() / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      grads[0]->data()[i] += static_cast<float>(k * (static_cast<double>(sv.data()[i]) - target.data()[i]));
    }
  };
  return student.tape().record(Tensor4::scalar(static_cast<float>(loss)), {student}, std::move(fn));
}

double total_distill(double l1, double l2, const LossWeights& w) { return w.alpha1 * l1 + w.alpha2 * l2; }

Var total_distill(Var l1, Var l2, const LossWeights& w) { return weighted_sum({l1, l2}, {w.alpha1, w.alpha2}); }

double phase_loss(Phase phase, const LossBreakdown& b, const LossWeights& w) {
  if (phase == Phase::I) return b.dice + b.bce;
  return w.lambda1 * (b.dice + b.bce) + w.lambda2 * b.l1_distill + w.lambda3 * b.l2_distill;
}

Var phase_loss(Phase phase, Var dice, Var bce, Var l1, Var l2, const LossWeights& w) {
  if (phase == Phase::I) return weighted_sum({dice, bce}, {1.0, 1.0});
  if (!l1.valid() || !l2.valid()) throw std::invalid_argument("phase II/III loss needs both distillation terms");
  return weighted_sum({dice, bce, l1, l2}, {w.lambda1, w.lambda1, w.lambda2, w.lambda3});
}

}  // namespace difom
