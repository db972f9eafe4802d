// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "difom/objectives.hpp"
#include "gradcheck.hpp"

using namespace difom;
using difom::testing::grad_check;
using difom::testing::random_tensor;

namespace {

double eval(const std::function<Var(Tape&)>& f) {
  Tape tape;
  return f(tape).value().item();
}

Tensor4 binary_tensor(Shape4 s, std::mt19937_64& rng) {
  std::bernoulli_distribution b(0.4);
  Tensor4 t(s);
  for (float& v : t.data()) v = b(rng) ? 1.0f : 0.0f;
  return t;
}

}  // namespace

TEST(DiceLoss, PerfectHardPredictionIsZero) {
  std::mt19937_64 rng(1);
  const Tensor4 gt = binary_tensor({2, 1, 8, 8}, rng);
  EXPECT_NEAR(eval([&](Tape& t) { return dice_loss(t.constant(gt), t.constant(gt)); }), 0.0, 1e-7);
}

TEST(DiceLoss, TotalMissApproachesOne) {
  const std::size_t n = 64 * 64;
  const double delta = 1e-6;
  const Tensor4 pred({1, 1, 64, 64}, static_cast<float>(delta));
  const Tensor4 gt({1, 1, 64, 64}, 1.0f);
  const double loss = eval([&](Tape& t) { return dice_loss(t.constant(pred), t.constant(gt)); });
  const double pd = static_cast<float>(delta);
  EXPECT_NEAR(loss, 1.0 - (2.0 * n * pd + 1.0) / (n * pd + n + 1.0), 1e-6);
  EXPECT_GT(loss, 0.999);
}

TEST(DiceLoss, HalfPredictionOnHalfMask) {
  Tensor4 gt({1, 1, 2, 2});
  gt.data()[0] = gt.data()[3] = 1.0f;
  const double loss = eval([&](Tape& t) { return dice_loss(t.constant(Tensor4({1, 1, 2, 2}, 0.5f)), t.constant(gt)); });
  EXPECT_NEAR(loss, 0.4, 1e-6);  // 1 - (2*1 + 1) / (2 + 2 + 1)
}

TEST(DiceLoss, BatchIsMeanOfPerSampleLosses) {
  std::mt19937_64 rng(2);
  const Tensor4 p = random_tensor({3, 1, 5, 5}, rng, 0.01f, 0.99f);
  const Tensor4 g = binary_tensor({3, 1, 5, 5}, rng);
  double expected = 0.0;
  for (std::size_t n = 0; n < 3; ++n) {
    double inter = 0, sp = 0, sg = 0;
    for (std::size_t i = 0; i < 25; ++i) {
      inter += double(p.data()[n * 25 + i]) * g.data()[n * 25 + i];
      sp += p.data()[n * 25 + i];
      sg += g.data()[n * 25 + i];
    }
    expected += (1.0 - (2 * inter + 1) / (sp + sg + 1)) / 3.0;
  }
  EXPECT_NEAR(eval([&](Tape& t) { return dice_loss(t.constant(p), t.constant(g)); }), expected, 1e-6);
}

TEST(BceLoss, AnalyticValues) {
  const Tensor4 gt = [] {
    Tensor4 t({1, 1, 4, 4});
    for (std::size_t i = 0; i < 16; i += 3) t.data()[i] = 1.0f;
    return t;
  }();
  EXPECT_NEAR(eval([&](Tape& t) { return bce_loss(t.constant(Tensor4({1, 1, 4, 4}, 0.5f)), t.constant(gt)); }),
              std::log(2.0), 1e-6);
  const double perfect = eval([&](Tape& t) { return bce_loss(t.constant(gt), t.constant(gt)); });
  EXPECT_GE(perfect, 0.0);
  EXPECT_LT(perfect, 2e-7);
  EXPECT_NEAR(eval([](Tape& t) {
                return bce_loss(t.constant(Tensor4::scalar(0.9f)), t.constant(Tensor4::scalar(1.0f)));
              }),
              0.10536051565782628, 1e-6);
}

TEST(DistillMse, IdentityOffsetAndBruteForce) {
  std::mt19937_64 rng(3);
  const Tensor4 a = random_tensor({1, 3, 4, 4}, rng, -2, 2);
  EXPECT_EQ(eval([&](Tape& t) { return distill_l1(t.constant(a), a); }), 0.0);
  Tensor4 shifted = a;
  for (float& v : shifted.data()) v += 0.75f;
  EXPECT_NEAR(eval([&](Tape& t) { return distill_l2(t.constant(shifted), a); }), 0.5625, 1e-6);
  const Tensor4 b = random_tensor({1, 3, 4, 4}, rng, -2, 2);
  double brute = 0.0;
  for (std::size_t i = 0; i < 48; ++i) brute += std::pow(double(a.data()[i]) - b.data()[i], 2);
  brute /= 48.0;
  EXPECT_NEAR(eval([&](Tape& t) { return distill_l1(t.constant(a), b); }), brute, 1e-7 * std::max(1.0, brute));
}

TEST(DistillMse, TeacherSideCarriesNoGradient) {
  std::mt19937_64 rng(4);
  Tape tape;
  Var s = tape.variable(random_tensor({1, 2, 3, 3}, rng));
  const Tensor4 target = random_tensor({1, 2, 3, 3}, rng);
  tape.backward(distill_mse(s, target));
  for (std::size_t i = 0; i < 18; ++i) {
    EXPECT_NEAR(tape.grad(s).data()[i], 2.0 * (s.value().data()[i] - target.data()[i]) / 18.0, 1e-6);
  }
}

TEST(Losses, ShapeMismatchThrows) {
  Tape tape;
  Var a = tape.constant(Tensor4({1, 1, 4, 4}, 0.5f));
  Var b = tape.constant(Tensor4({1, 1, 4, 5}, 0.5f));
  EXPECT_THROW(dice_loss(a, b), DimensionError);
  EXPECT_THROW(bce_loss(a, b), DimensionError);
  EXPECT_THROW(distill_mse(a, Tensor4({1, 2, 4, 4})), DimensionError);
}

TEST(TotalDistill, PaperWeights) {
  const LossWeights w;
  EXPECT_EQ(w.alpha1, 1.0);
  EXPECT_EQ(w.alpha2, 0.5);
  EXPECT_NEAR(total_distill(0.2, 0.4, w), 0.4, 1e-12);
  LossWeights no_second = w;
  no_second.alpha2 = 0.0;
  EXPECT_EQ(total_distill(0.37, 0.9, no_second), 0.37);
  EXPECT_EQ(total_distill(0.0, 0.0, w), 0.0);
  EXPECT_NEAR(eval([&](Tape& t) {
                return total_distill(t.constant(Tensor4::scalar(0.2f)), t.constant(Tensor4::scalar(0.4f)), w);
              }),
              0.4, 1e-6);
}

TEST(TotalDistill, LinearInWeights) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 3);
  for (int i = 0; i < 50; ++i) {
    LossWeights w;
    w.alpha1 = u(rng);
    w.alpha2 = u(rng);
    const double k = u(rng), l1 = u(rng), l2 = u(rng);
    LossWeights scaled = w;
    scaled.alpha1 *= k;
    scaled.alpha2 *= k;
    EXPECT_NEAR(total_distill(l1, l2, scaled), k * total_distill(l1, l2, w), 1e-12);
  }
}

TEST(PhaseLoss, HandComputedTotals) {
  const LossWeights w;
  EXPECT_EQ(w.lambda1, 0.6);
  EXPECT_EQ(w.lambda2, 0.1);
  EXPECT_EQ(w.lambda3, 0.1);
  const LossBreakdown b{0.3, 0.5, 0.2, 0.4, 0.0};
  EXPECT_NEAR(phase_loss(Phase::I, b, w), 0.8, 1e-12);
  EXPECT_NEAR(phase_loss(Phase::II, b, w), 0.54, 1e-12);
  EXPECT_EQ(phase_loss(Phase::III, b, w), phase_loss(Phase::II, b, w));
}

TEST(PhaseLoss, DifferentiableFormMatchesScalarFormula) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(0, 2);
  const LossWeights w;
  for (int i = 0; i < 100; ++i) {
    const LossBreakdown b{u(rng), u(rng), u(rng), u(rng), 0.0};
    for (Phase ph : {Phase::I, Phase::II, Phase::III}) {
      Tape t;
      auto c = [&](double v) { return t.constant(Tensor4::scalar(static_cast<float>(v))); };
      const double v = phase_loss(ph, c(b.dice), c(b.bce), c(b.l1_distill), c(b.l2_distill), w).value().item();
      EXPECT_NEAR(v, phase_loss(ph, b, w), 1e-6);
    }
  }
  Tape t;
  Var one = t.constant(Tensor4::scalar(1.0f));
  EXPECT_THROW(phase_loss(Phase::II, one, one, Var{}, one, w), std::invalid_argument);
  EXPECT_NO_THROW(phase_loss(Phase::I, one, one, Var{}, Var{}, w));
}

TEST(Losses, NonNegativeOnRandomInputs) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Tensor4 p = random_tensor({2, 1, 6, 6}, rng, 0.0f, 1.0f);
    const Tensor4 g = binary_tensor({2, 1, 6, 6}, rng);
    EXPECT_GE(eval([&](Tape& t) { return dice_loss(t.constant(p), t.constant(g)); }), 0.0);
    EXPECT_GE(eval([&](Tape& t) { return bce_loss(t.constant(p), t.constant(g)); }), 0.0);
    const double m = eval([&](Tape& t) { return distill_mse(t.constant(p), g); });
    EXPECT_GT(m, 0.0);  // p is continuous, so it never equals g elementwise
  }
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<std::size_t> d(1, 6);
    const Shape4 s{d(rng) % 3 + 1, d(rng) % 2 + 1, d(rng), d(rng)};
    const Tensor4 p = random_tensor(s, rng, 0.05f, 0.95f);
    const Tensor4 g = random_tensor(s, rng, 0.0f, 1.0f);
    const Tensor4 target = random_tensor(s, rng, -1.0f, 1.0f);
    const double dice_err =
        grad_check([](Tape&, const std::vector<Var>& v) { return dice_loss(v[0], v[1]); }, {p, g}, rng)
            .max_relative_error;
    const double bce_err =
        grad_check([](Tape&, const std::vector<Var>& v) { return bce_loss(v[0], v[1]); }, {p, g}, rng)
            .max_relative_error;
    const double mse_err =
        grad_check([&](Tape&, const std::vector<Var>& v) { return distill_mse(v[0], target); }, {p}, rng)
            .max_relative_error;
    EXPECT_LT(dice_err, 1e-2) << "dice trial " << trial;
    EXPECT_LT(bce_err, 1e-2) << "bce trial " << trial;
    EXPECT_LT(mse_err, 1e-2) << "mse trial " << trial;

    const LossWeights w;
    const Tensor4 st = random_tensor({1, 2, 3, 3}, rng, -1.0f, 1.0f);
    const double phase_err =
        grad_check(
            [&](Tape&, const std::vector<Var>& v) {
              Var l1 = distill_l1(v[2], st), l2 = distill_l2(v[3], st);
              return add(phase_loss(Phase::II, dice_loss(v[0], v[1]), bce_loss(v[0], v[1]), l1, l2, w),
                         total_distill(l1, l2, w));
            },
            {p, g, random_tensor({1, 2, 3, 3}, rng), random_tensor({1, 2, 3, 3}, rng)}, rng)
            .max_relative_error;
    EXPECT_LT(phase_err, 1e-2) << "phase trial " << trial;
  }
}

TEST(LossWeights, Validation) {
  LossWeights w;
  EXPECT_NO_THROW(w.validate());
  w.lambda2 = -0.1;
  EXPECT_THROW(w.validate(), std::invalid_argument);
  w.lambda2 = NAN;
  EXPECT_THROW(w.validate(), std::invalid_argument);
}
