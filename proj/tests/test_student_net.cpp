// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "difom/feature_map.hpp"
#include "difom/student_net.hpp"
#include "gradcheck.hpp"

using namespace difom;
using difom::testing::random_tensor;

namespace {

Tensor4 random_image(std::size_t n, std::size_t size, std::mt19937_64& rng) {
  return random_tensor({n, 3, size, size}, rng, 0.0f, 1.0f);
}

Var mse(Var a, Var b) {
  Var d = add(a, scale(b, -1.0));
  return mean(mul(d, d));
}

}  // namespace

TEST(StudentNet, DeskScaleShapes) {
  ModelConfig cfg = ModelConfig::desk();
  cfg.latent_channels = 32;
  StudentNet net(cfg, 1);
  std::mt19937_64 rng(1);
  Tape tape;
  auto [feats, lat] = net.encode(tape, tape.constant(random_image(2, 64, rng)));
  ASSERT_EQ(feats.f.size(), 4u);
  const std::size_t sides[] = {32, 16, 8, 4}, chans[] = {8, 16, 32, 64};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(feats.f[i].shape(), (Shape4{2, chans[i], sides[i], sides[i]}));
  EXPECT_EQ(lat.l1.shape(), (Shape4{2, 32, 4, 4}));
  EXPECT_EQ(lat.l2.shape(), lat.l1.shape());
}

TEST(StudentNet, PaperScaleEncoderShapes) {
  ModelConfig cfg = ModelConfig::paper();
  EXPECT_EQ(cfg.input_size, 352u);
  StudentNet net(cfg, 2);
  Tape tape;
  auto [feats, lat] = net.encode(tape, tape.constant(Tensor4({1, 3, 352, 352}, 0.25f)));
  EXPECT_EQ(feats.f[0].shape(), (Shape4{1, 64, 176, 176}));
  EXPECT_EQ(feats.f[3].shape(), (Shape4{1, 512, 22, 22}));
  EXPECT_EQ(lat.l1.shape(), (Shape4{1, 256, 22, 22}));
  EXPECT_EQ(lat.l2.shape(), (Shape4{1, 256, 22, 22}));
}

TEST(StudentNet, ZeroImageGivesFiniteActivations) {
  StudentNet net(ModelConfig::desk(), 3);
  Tape tape;
  auto [feats, lat] = net.encode(tape, tape.constant(Tensor4({1, 3, 64, 64})));
  for (const Var& f : feats.f) EXPECT_TRUE(f.value().all_finite());
  EXPECT_TRUE(lat.l1.value().all_finite());
  EXPECT_TRUE(lat.l2.value().all_finite());
  EXPECT_TRUE(net.decode(tape, feats, lat).value().all_finite());
}

TEST(StudentNet, OutputShapeAndRange) {
  std::mt19937_64 rng(4);
  for (bool distill : {true, false}) {
    ModelConfig cfg = ModelConfig::desk();
    cfg.distillation = distill;
    StudentNet net(cfg, 4);
    Tape tape;
    Var out = net.forward(tape, tape.constant(random_image(3, 64, rng)));
    EXPECT_EQ(out.shape(), (Shape4{3, 1, 64, 64}));
    for (float v : out.value().data()) {
      EXPECT_GT(v, 0.0f);
      EXPECT_LT(v, 1.0f);
    }
  }
  ModelConfig small;
  small.input_size = 16;
  small.channels = {4, 6};
  small.latent_channels = 3;
  StudentNet net(small, 5);
  Tape tape;
  EXPECT_EQ(net.forward(tape, tape.constant(random_image(1, 16, rng))).shape(), (Shape4{1, 1, 16, 16}));
}

TEST(StudentNet, ProjectionShapeContract) {
  ModelConfig cfg = ModelConfig::desk();
  cfg.latent_channels = 32;
  cfg.d_star = 8;
  cfg.teacher_resolution = 16;
  StudentNet net(cfg, 6);
  std::mt19937_64 rng(6);
  Tape tape;
  auto [feats, lat] = net.encode(tape, tape.constant(random_image(2, 64, rng)));
  ProjectedLatents p = net.project_latents(tape, lat, 8);
  EXPECT_EQ(p.l1.shape(), (Shape4{2, 8, 16, 16}));
  EXPECT_EQ(p.l2.shape(), (Shape4{2, 8, 16, 16}));
  EXPECT_THROW(net.project_latents(tape, lat, 9), DimensionError);
}

TEST(StudentNet, IdentityProjectionReturnsResizedLatent) {
  ModelConfig cfg = ModelConfig::desk();
  cfg.latent_channels = 8;
  cfg.d_star = 8;
  cfg.teacher_resolution = 8;
  StudentNet net(cfg, 7);
  for (const char* name : {"proj.l1", "proj.l2"}) {
    Parameter& w = net.parameter(std::string(name) + ".weight");
    w.value.fill(0.0f);
    for (std::size_t c = 0; c < 8; ++c) w.value.at(c, c, 0, 0) = 1.0f;
    net.parameter(std::string(name) + ".bias").value.fill(0.0f);
  }
  std::mt19937_64 rng(7);
  Tape tape;
  auto [feats, lat] = net.encode(tape, tape.constant(random_image(1, 64, rng)));
  ProjectedLatents p = net.project_latents(tape, lat, 8);
  for (auto [latent, projected] : {std::pair{lat.l1, p.l1}, std::pair{lat.l2, p.l2}}) {
    FeatureMap m(8, 4, 4);
    std::copy(latent.value().data().begin(), latent.value().data().end(), m.data().begin());
    FeatureMap expected = resize_bilinear(m, 8, 8);
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(projected.value().data()[i], expected.data()[i], 1e-6);
  }
}

TEST(StudentNet, ProjectionWeightGradientMatchesFiniteDifference) {
  ModelConfig cfg = ModelConfig::desk();
  StudentNet net(cfg, 8);
  std::mt19937_64 rng(8);
  const Tensor4 image = random_image(1, 64, rng);
  const Tensor4 target = random_tensor({1, cfg.d_star, cfg.teacher_resolution, cfg.teacher_resolution}, rng, -1, 1);
  auto loss_value = [&](bool with_backward) {
    Tape tape;
    auto [feats, lat] = net.encode(tape, tape.constant(image));
    ProjectedLatents p = net.project_latents(tape, lat, cfg.d_star);
    Var loss = add(mse(p.l1, tape.constant(target)), scale(mse(p.l2, tape.constant(target)), 0.5));
    if (with_backward) tape.backward(loss);
    return static_cast<double>(loss.value().item());
  };
  for (const char* name : {"proj.l1.weight", "proj.l2.weight", "latent.l1.weight"}) {
    Parameter& w = net.parameter(name);
    loss_value(true);
    const Tensor4 analytic = w.grad;
    std::uniform_int_distribution<std::size_t> pick(0, w.value.numel() - 1);
    double num_sq = 0, diff_sq = 0;
    for (int k = 0; k < 12; ++k) {
      const std::size_t i = pick(rng);
      const float orig = w.value.data()[i];
      const float h = 1e-2f;
      w.value.data()[i] = orig + h;
      const double up = loss_value(false);
      w.value.data()[i] = orig - h;
      const double down = loss_value(false);
      w.value.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      num_sq += numeric * numeric;
      diff_sq += (numeric - analytic.data()[i]) * (numeric - analytic.data()[i]);
    }
    EXPECT_GT(num_sq, 0.0) << name;
    EXPECT_LT(std::sqrt(diff_sq / num_sq), 1e-2) << name;
  }
}

TEST(StudentNet, StructuralLatentIsComputedFromSemanticLatent) {
  StudentNet net(ModelConfig::desk(), 9);
  std::mt19937_64 rng(9);
  Tape tape;
  auto [feats, lat] = net.encode(tape, tape.constant(random_image(1, 64, rng)));
  tape.backward(sum(lat.l2));
  // The only route from the l1 projection weights to l2 passes through l1.
  double g = 0.0;
  for (float v : net.parameter("latent.l1.weight").grad.data()) g += std::abs(v);
  EXPECT_GT(g, 0.0);
}

TEST(StudentNet, DistillationAdditionsUnderFivePercent) {
  ModelConfig cfg = ModelConfig::desk();
  StudentNet distilled(cfg, 10);
  cfg.distillation = false;
  StudentNet vanilla(cfg, 10);
  const double extra = static_cast<double>(distilled.parameter_count() - vanilla.parameter_count());
  EXPECT_LT(extra / static_cast<double>(vanilla.parameter_count()), 0.05);
  EXPECT_EQ(vanilla.parameter_count(ParamGroup::Latent), 0u);
  EXPECT_EQ(vanilla.parameter_count(ParamGroup::Projection), 0u);
  EXPECT_EQ(distilled.parameter_count(ParamGroup::Encoder), vanilla.parameter_count(ParamGroup::Encoder));
}

TEST(StudentNet, SeedDeterminesParametersAndOutputs) {
  std::mt19937_64 rng(11);
  const Tensor4 image = random_image(2, 64, rng);
  StudentNet a(ModelConfig::desk(), 42), b(ModelConfig::desk(), 42), c(ModelConfig::desk(), 43);
  auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(std::equal(pa[i]->value.data().begin(), pa[i]->value.data().end(), pb[i]->value.data().begin()));
    any_diff |= !std::equal(pa[i]->value.data().begin(), pa[i]->value.data().end(), pc[i]->value.data().begin());
  }
  EXPECT_TRUE(any_diff);
  Tape ta, tb;
  const Tensor4 ya = a.forward(ta, ta.constant(image)).value();
  const Tensor4 yb = b.forward(tb, tb.constant(image)).value();
  EXPECT_TRUE(std::equal(ya.data().begin(), ya.data().end(), yb.data().begin()));
}

TEST(StudentNet, InferenceNeedsOnlyTheImage) {
  // Decoding consumes student latents; no teacher input exists on this path.
  StudentNet net(ModelConfig::desk(), 12);
  std::mt19937_64 rng(12);
  Tape tape;
  auto [feats, lat] = net.encode(tape, tape.constant(random_image(1, 64, rng)));
  EXPECT_NO_THROW(net.decode(tape, feats, lat));
  StudentLatents missing;
  EXPECT_THROW(net.decode(tape, feats, missing), std::invalid_argument);
}

TEST(StudentNet, GroupsAndFreezing) {
  StudentNet net(ModelConfig::desk(), 13);
  std::size_t total = 0;
  for (ParamGroup g : {ParamGroup::Encoder, ParamGroup::Latent, ParamGroup::Projection, ParamGroup::Decoder}) {
    total += net.parameter_count(g);
  }
  EXPECT_EQ(total, net.parameter_count());
  net.set_trainable(ParamGroup::Encoder, false);
  for (Parameter* p : net.parameters(ParamGroup::Encoder)) EXPECT_FALSE(p->trainable);
  for (Parameter* p : net.parameters(ParamGroup::Latent)) EXPECT_TRUE(p->trainable);
  EXPECT_THROW(net.parameter("nope"), std::out_of_range);
}

TEST(StudentNet, RejectsInvalidConfigAndInput) {
  ModelConfig cfg = ModelConfig::desk();
  cfg.input_size = 60;
  EXPECT_THROW(StudentNet(cfg, 0), std::invalid_argument);
  cfg = ModelConfig::desk();
  cfg.channels = {8, 8, 16, 32};
  EXPECT_THROW(StudentNet(cfg, 0), std::invalid_argument);
  cfg = ModelConfig::desk();
  cfg.latent_channels = 0;
  EXPECT_THROW(StudentNet(cfg, 0), std::invalid_argument);

  StudentNet net(ModelConfig::desk(), 0);
  Tape tape;
  EXPECT_THROW(net.forward(tape, tape.constant(Tensor4({1, 1, 64, 64}))), DimensionError);
  EXPECT_THROW(net.forward(tape, tape.constant(Tensor4({1, 3, 32, 32}))), DimensionError);
  EXPECT_THROW(net.forward(tape, tape.constant(Tensor4({1, 3, 64, 64}, 1.5f))), std::invalid_argument);
}
