// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "difom/autodiff.hpp"

namespace difom {

inline constexpr double kDiceSmoothing = 1.0;
inline constexpr double kBceClamp = 1e-7;

struct LossWeights {
  double alpha1 = 1.0;   // semantic distillation stage
  double alpha2 = 0.5;   // structural distillation stage
  double lambda1 = 0.6;  // segmentation term in phases II/III
  double lambda2 = 0.1;  // L1 distillation in phases II/III
  double lambda3 = 0.1;  // L2 distillation in phases II/III

  /// Throws std::invalid_argument on a negative or non-finite weight.
  void validate() const;
};

enum class Phase { I = 1, II = 2, III = 3 };
const char* to_string(Phase phase);

struct LossBreakdown {
  double dice = 0.0;
  double bce = 0.0;
  double l1_distill = 0.0;
  double l2_distill = 0.0;
  double total = 0.0;
};

/// 1 - (2 sum(pg) + eps) / (sum(p) + sum(g) + eps) per sample, averaged over the batch.
Var dice_loss(Var pred, Var gt);
/// Mean binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7].
Var bce_loss(Var pred, Var gt);
/// Mean squared error against a constant target.
Var distill_mse(Var student, const Tensor4& teacher);
inline Var distill_l1(Var projected_l1, const Tensor4& e_lfc) { return distill_mse(projected_l1, e_lfc); }
inline Var distill_l2(Var projected_l2, const Tensor4& e_hfc) { return distill_mse(projected_l2, e_hfc); }

/// alpha1 * L1 + alpha2 * L2.
double total_distill(double l1, double l2, const LossWeights& w);
Var total_distill(Var l1, Var l2, const LossWeights& w);

/// Phase I: dice + bce. Phases II and III: lambda1 (dice + bce) + lambda2 L1 + lambda3 L2.
double phase_loss(Phase phase, const LossBreakdown& parts, const LossWeights& w);
/// Differentiable form; l1/l2 are ignored (and may be invalid) in phase I.
Var phase_loss(Phase phase, Var dice, Var bce, Var l1, Var l2, const LossWeights& w);

}  // namespace difom
