// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, exit code 0 only if all pass.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "difom/binary_io.hpp"
#include "difom/checkpoint.hpp"
#include "difom/metrics.hpp"
#include "difom/objectives.hpp"
#include "difom/spectral.hpp"
#include "difom/teacher_io.hpp"
#include "difom/train.hpp"
#include "gradcheck.hpp"
#include "metric_oracles.hpp"

using namespace difom;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ------------------------------------------------------------------ 1. spectral

Outcome spectral_invariants() {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0.0, 1.0);
  double round_trip = 0, sum_err = 0, parseval = 0;
  bool masks_exact = true;
  const std::vector<std::pair<std::size_t, std::size_t>> grids = {{32, 32}, {16, 24}, {7, 9}, {37, 37}, {8, 5}};
  for (auto [h, w] : grids) {
    for (int rep = 0; rep < 4; ++rep) {
      FeatureMap64 x(6, h, w);
      for (double& v : x.data()) v = n(rng);
      const FeatureMap64 y = ifft2d(fft2d(x));
      for (std::size_t i = 0; i < x.size(); ++i) round_trip = std::max(round_trip, std::abs(y.data()[i] - x.data()[i]));

      FeatureMap f(6, h, w);
      for (float& v : f.data()) v = static_cast<float>(n(rng));
      for (double rho : {0.1, 0.25, 0.5, 0.9}) {
        const FrequencyComponents fc = decompose(f, rho);
        for (std::size_t i = 0; i < f.size(); ++i) {
          sum_err = std::max(sum_err, std::abs(double(fc.lfc.data()[i]) + fc.hfc.data()[i] - f.data()[i]));
        }
        auto energy = [](const SpectralMap& s) {
          double e = 0;
          for (const auto& b : s.bins) e += std::norm(b);
          return e;
        };
        const double full = energy(fft2d(f));
        parseval = std::max(parseval, std::abs(energy(fft2d(fc.lfc)) + energy(fft2d(fc.hfc)) - full) / full);

        const RadialMaskPair m = make_radial_masks(h, w, rho);
        for (std::size_t p = 0; p < h; ++p) {
          for (std::size_t q = 0; q < w; ++q) {
            const std::size_t i = p * w + q, j = ((h - p) % h) * w + (w - q) % w;
            masks_exact = masks_exact && m.lfc[i] + m.hfc[i] == 1 && m.lfc[i] == m.lfc[j] && m.hfc[i] == m.hfc[j];
          }
        }
      }
    }
  }
  Outcome o;
  o.pass = round_trip <= 1e-9 && sum_err <= 1e-5 && parseval <= 1e-6 && masks_exact;
  o.detail = "round trip " + num(round_trip) + " (<=1e-9), component sum " + num(sum_err) + " (<=1e-5), Parseval " +
             num(parseval) + " (<=1e-6), masks " + (masks_exact ? "exact" : "NOT exact");
  return o;
}

// ------------------------------------------------------------------ 2. gradients

Outcome gradient_suite() {
  using difom::testing::Builder;
  using difom::testing::grad_check;
  using difom::testing::random_tensor;
  std::mt19937_64 rng(202);
  struct Case {
    std::string name;
    std::function<std::vector<Tensor4>(std::size_t)> leaves;
    std::function<Builder(std::size_t)> build;
  };
  auto shape = [](std::size_t t) { return Shape4{1 + t % 2, 1 + t % 3, 2 * (1 + t % 3), 2 * (1 + t % 4)}; };
  auto unary = [&](std::string name, std::function<Var(Var)> f, float lo = -1, float hi = 1) {
    return Case{name, [&, shape, lo, hi](std::size_t t) { return std::vector<Tensor4>{random_tensor(shape(t), rng, lo, hi)}; },
                [f](std::size_t) { return Builder([f](Tape&, const std::vector<Var>& v) { return f(v[0]); }); }};
  };
  auto binary = [&](std::string name, std::function<Var(Var, Var)> f) {
    return Case{name,
                [&, shape](std::size_t t) {
                  return std::vector<Tensor4>{random_tensor(shape(t), rng), random_tensor(shape(t), rng)};
                },
                [f](std::size_t) { return Builder([f](Tape&, const std::vector<Var>& v) { return f(v[0], v[1]); }); }};
  };
  const LossWeights w;
  std::vector<Case> cases = {
      {"conv2d",
       [&](std::size_t t) {
         const std::size_t k = t % 4 == 1 ? 1 : 3;
         return std::vector<Tensor4>{random_tensor({2, 3, 8, 8}, rng), random_tensor({4, 3, k, k}, rng),
                                     random_tensor({1, 4, 1, 1}, rng)};
       },
       [](std::size_t t) {
         const std::size_t k = t % 4 == 1 ? 1 : 3, stride = 1 + t % 2, pad = k == 1 ? 0 : t % 3 == 0 ? 0 : 1;
         return Builder([=](Tape&, const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], stride, pad); });
       }},
      {"bilinear_resize",
       [&](std::size_t t) { return std::vector<Tensor4>{random_tensor(shape(t), rng)}; },
       [](std::size_t t) {
         return Builder([t](Tape&, const std::vector<Var>& v) { return bilinear_resize(v[0], 3 + t % 5, 2 + t % 7); });
       }},
      unary("maxpool2", [](Var x) { return maxpool2(x); }),
      unary("upsample2", [](Var x) { return upsample2(x); }),
      unary("sigmoid", [](Var x) { return sigmoid(x); }, -3, 3),
      unary("scale", [](Var x) { return scale(x, -1.7); }),
      unary("sum", [](Var x) { return sum(x); }),
      unary("mean", [](Var x) { return mean(x); }),
      binary("add", [](Var a, Var b) { return add(a, b); }),
      binary("mul", [](Var a, Var b) { return mul(a, b); }),
      binary("concat_channels", [](Var a, Var b) { return concat_channels({a, b}); }),
      binary("weighted_sum", [](Var a, Var b) { return weighted_sum({a, b}, {0.6, -0.25}); }),
      {"relu",
       [&](std::size_t t) {
         Tensor4 x = random_tensor(shape(t), rng);
         for (float& v : x.data()) v = std::copysign(0.005f + std::abs(v), v);  // away from the kink
         return std::vector<Tensor4>{x};
       },
       [](std::size_t) { return Builder([](Tape&, const std::vector<Var>& v) { return relu(v[0]); }); }},
      {"dice_loss",
       [&](std::size_t t) {
         return std::vector<Tensor4>{random_tensor(shape(t), rng, 0.05f, 0.95f), random_tensor(shape(t), rng, 0, 1)};
       },
       [](std::size_t) { return Builder([](Tape&, const std::vector<Var>& v) { return dice_loss(v[0], v[1]); }); }},
      {"bce_loss",
       [&](std::size_t t) {
         return std::vector<Tensor4>{random_tensor(shape(t), rng, 0.05f, 0.95f), random_tensor(shape(t), rng, 0, 1)};
       },
       [](std::size_t) { return Builder([](Tape&, const std::vector<Var>& v) { return bce_loss(v[0], v[1]); }); }},
      {"distill_mse",
       [&](std::size_t t) { return std::vector<Tensor4>{random_tensor(shape(t), rng)}; },
       [&](std::size_t t) {
         const Tensor4 teacher = random_tensor(shape(t), rng);
         return Builder([teacher](Tape&, const std::vector<Var>& v) { return distill_mse(v[0], teacher); });
       }},
      {"total_distill",
       [&](std::size_t t) { return std::vector<Tensor4>{random_tensor(shape(t), rng), random_tensor(shape(t), rng)}; },
       [w](std::size_t) {
         return Builder([w](Tape&, const std::vector<Var>& v) { return total_distill(mean(v[0]), mean(mul(v[1], v[1])), w); });
       }},
      {"phase_loss",
       [&](std::size_t t) {
         return std::vector<Tensor4>{random_tensor(shape(t), rng, 0.05f, 0.95f), random_tensor(shape(t), rng, 0, 1),
                                     random_tensor({1, 2, 3, 3}, rng), random_tensor({1, 2, 3, 3}, rng)};
       },
       [w](std::size_t t) {
         const Phase phase = t % 3 == 0 ? Phase::I : t % 3 == 1 ? Phase::II : Phase::III;
         return Builder([w, phase](Tape&, const std::vector<Var>& v) {
           const Tensor4 target(v[2].shape(), 0.25f);
           Var seg_d = dice_loss(v[0], v[1]), seg_b = bce_loss(v[0], v[1]);
           if (phase == Phase::I) return phase_loss(phase, seg_d, seg_b, Var{}, Var{}, w);
           return phase_loss(phase, seg_d, seg_b, distill_l1(v[2], target), distill_l2(v[3], target), w);
         });
       }},
  };
  constexpr std::size_t kTrials = 20;
  double worst = 0;
  std::string worst_name;
  std::size_t checks = 0;
  for (const Case& c : cases) {
    for (std::size_t t = 0; t < kTrials; ++t) {
      const auto r = grad_check(c.build(t), c.leaves(t), rng);
      if (r.max_relative_error > worst) worst = r.max_relative_error, worst_name = c.name;
      ++checks;
    }
  }
  Outcome o;
  o.pass = worst < 1e-2;
  o.detail = std::to_string(cases.size()) + " ops x " + std::to_string(kTrials) + " cases, worst relative error " +
             num(worst) + " (" + worst_name + ", < 1e-2)";
  return o;
}

// ------------------------------------------------------------------ 3. loss formulas

Outcome loss_fidelity() {
  const LossWeights w;  // alpha 1.0 / 0.5, lambda 0.6 / 0.1 / 0.1
  Tape tape;
  Tensor4 gt({1, 1, 2, 2});
  gt.data()[0] = gt.data()[3] = 1.0f;
  Var pred = tape.constant(Tensor4({1, 1, 2, 2}, 0.5f));
  Var g = tape.constant(gt);
  const Tensor4 zero({1, 2, 2, 2});
  Var s1 = tape.constant(Tensor4({1, 2, 2, 2}, 0.3f)), s2 = tape.constant(Tensor4({1, 2, 2, 2}, -0.5f));
  Var dice = dice_loss(pred, g), bce = bce_loss(pred, g);
  Var l1 = distill_l1(s1, zero), l2 = distill_l2(s2, zero);

  // By hand: dice = 1 - (2*1 + 1)/(2 + 2 + 1) = 0.4; bce = ln 2; L1 = 0.3^2; L2 = 0.5^2.
  const double dice_h = 0.4, bce_h = std::log(2.0), l1_h = 0.09, l2_h = 0.25;
  struct Check {
    const char* name;
    double got, expected;
  };
  const std::vector<Check> checks = {
      {"dice", dice.value().item(), dice_h},
      {"bce", bce.value().item(), bce_h},
      {"L_L1", l1.value().item(), l1_h},
      {"L_L2", l2.value().item(), l2_h},
      {"distill", total_distill(l1, l2, w).value().item(), 1.0 * l1_h + 0.5 * l2_h},
      {"phase I", phase_loss(Phase::I, dice, bce, Var{}, Var{}, w).value().item(), dice_h + bce_h},
      {"phase II", phase_loss(Phase::II, dice, bce, l1, l2, w).value().item(),
       0.6 * (dice_h + bce_h) + 0.1 * l1_h + 0.1 * l2_h},
      {"phase III", phase_loss(Phase::III, dice, bce, l1, l2, w).value().item(),
       0.6 * (dice_h + bce_h) + 0.1 * l1_h + 0.1 * l2_h},
      {"phase I (0.3, 0.5)", phase_loss(Phase::I, LossBreakdown{0.3, 0.5, 0.2, 0.4, 0}, w), 0.8},
      {"phase II (0.3, 0.5, 0.2, 0.4)", phase_loss(Phase::II, LossBreakdown{0.3, 0.5, 0.2, 0.4, 0}, w), 0.54},
      {"distill (0.2, 0.4)", total_distill(0.2, 0.4, w), 0.4},
  };
  Outcome o;
  double worst = 0;
  for (const Check& c : checks) {
    const double err = std::abs(c.got - c.expected);
    worst = std::max(worst, err);
    if (err > 1e-6) {
      o.pass = false;
      o.detail += std::string(c.name) + " " + num(c.got, 9) + " != " + num(c.expected, 9) + "; ";
    }
  }
  const bool defaults = w.alpha1 == 1.0 && w.alpha2 == 0.5 && w.lambda1 == 0.6 && w.lambda2 == 0.1 && w.lambda3 == 0.1;
  o.pass = o.pass && defaults;
  o.detail += std::to_string(checks.size()) + " hand-computed totals, max error " + num(worst) +
              (defaults ? " (<= 1e-6), default weights confirmed" : ", DEFAULT WEIGHTS DIFFER");
  return o;
}

// ------------------------------------------------------------------ shared training helpers

TeacherProvider synthetic_teachers(std::uint64_t seed, const ModelConfig& model) {
  return TeacherProvider({TeacherSource::Kind::Synthetic, default_synth_spec(0.1), seed, {}},
                         FusionOptions{model.teacher_resolution, true}, 0.25);
}

double mean_dice(StudentNet& model, std::span<const SegmentationSample> data) {
  const auto preds = predict(model, data);
  double total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) total += dice_iou_curve(make_eval_pair(preds[i], data[i].mask)).dice;
  return total / static_cast<double>(data.size());
}

// ------------------------------------------------------------------ 4. phase schedule

Outcome phase_schedule() {
  const auto data = make_synthetic_dataset({32, 64, 404, kCamouflageContrast});
  const ModelConfig mc = ModelConfig::desk();
  StudentNet model(mc, 4);
  TeacherProvider teachers = synthetic_teachers(4, mc);
  TrainConfig config = TrainConfig::desk();  // 60 epochs, boundaries 20 / 40
  config.seed = 4;

  std::size_t phase1_steps = 0, phase1_accesses = 0, phase3_steps = 0;
  std::vector<std::vector<float>> frozen;
  double delta = 0;
  auto snapshot = [](StudentNet& m) {
    std::vector<std::vector<float>> s;
    for (Parameter* p : m.parameters(ParamGroup::Encoder)) s.emplace_back(p->value.data().begin(), p->value.data().end());
    return s;
  };
  const TrainResult result = run_training(config, model, data, &teachers, [&](const StepRecord& r, StudentNet& m) {
    if (r.phase == Phase::I) {
      ++phase1_steps;
      phase1_accesses = std::max(phase1_accesses, teachers.accesses());
    }
    if (r.phase == Phase::II && r.epoch + 1 == config.phase2_end) frozen = snapshot(m);  // last phase-II weights
    if (r.phase == Phase::III) {
      ++phase3_steps;
      const auto now = snapshot(m);
      for (std::size_t i = 0; i < now.size(); ++i)
        for (std::size_t j = 0; j < now[i].size(); ++j) delta += std::abs(double(now[i][j]) - frozen[i][j]);
    }
  });
  Outcome o;
  o.pass = phase1_steps == 160 && phase1_accesses == 0 && result.teacher_accesses_phase1 == 0 && phase3_steps == 160 &&
           delta == 0.0 && result.teacher_accesses > 0;
  o.detail = "60 epochs (20/40): teacher accesses in phase I = " + std::to_string(phase1_accesses) + " over " +
             std::to_string(phase1_steps) + " steps; sum|dW_encoder| over " + std::to_string(phase3_steps) +
             " phase-III steps = " + num(delta) + "; phase II/III loads " + std::to_string(result.teacher_accesses);
  return o;
}

// ------------------------------------------------------------------ 5. overfit

Outcome overfit_check() {
  const auto t0 = Clock::now();
  const auto data = make_synthetic_dataset({8, 64, 505, 0.25});
  const ModelConfig mc = ModelConfig::desk();
  StudentNet model(mc, 5);
  TrainConfig config = TrainConfig::desk();
  config.total_epochs = 150;  // 2 steps per epoch -> 300 steps
  config.phase1_end = 149;
  config.phase2_end = 150;
  config.augmentation = false;
  config.distillation = false;
  config.seed = 5;
  double best = 0;
  std::size_t reached_at = 0;
  std::string trace;
  run_training(config, model, data, nullptr, [&](const StepRecord& r, StudentNet& m) {
    if ((r.step + 1) % 50 != 0 || r.step + 1 > 300 || reached_at) return;
    const double d = mean_dice(m, data);
    trace += " " + std::to_string(r.step + 1) + ":" + num(d);
    best = std::max(best, d);
    if (d > 0.95) reached_at = r.step + 1;
  });
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = reached_at > 0 && secs < 300;
  o.detail = "train mDice by step" + trace + (reached_at ? " -> > 0.95 at step " + std::to_string(reached_at)
                                                          : " -> never > 0.95 (best " + num(best) + ")") +
             ", " + num(secs, 3) + " s (< 300 s)";
  return o;
}

// ------------------------------------------------------------------ 6. distillation benefit

Outcome distillation_benefit() {
  const auto t0 = Clock::now();
  std::vector<double> distilled, seg_only;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto train = make_synthetic_dataset({32, 64, 100 + seed, kCamouflageContrast});
    auto test = make_synthetic_dataset({16, 64, 900 + seed, kCamouflageContrast});
    double score[2] = {0, 0};
    for (int arm = 0; arm < 2; ++arm) {
      const bool distill = arm == 0;
      const ModelConfig mc = ModelConfig::desk();  // same architecture for both arms
      StudentNet model(mc, seed);
      TeacherProvider teachers = synthetic_teachers(seed, mc);
      TrainConfig config = TrainConfig::desk();
      config.seed = seed;
      config.cutoff = 0.25;
      config.distillation = distill;
      run_training(config, model, train, &teachers);
      score[arm] = mean_dice(model, test);
    }
    distilled.push_back(score[0]);
    seg_only.push_back(score[1]);
    per_seed += " s" + std::to_string(seed) + " " + num(score[0], 4) + "/" + num(score[1], 4);
    std::fprintf(stderr, "  [6] seed %d: distilled %.4f, seg-only %.4f (%.0f s)\n", int(seed), score[0], score[1],
                 seconds_since(t0));
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + 2, v.end());
    return v[2];
  };
  const double md = median(distilled), ms = median(seg_only), secs = seconds_since(t0);
  Outcome o;
  o.pass = md > ms && secs < 3600;
  o.detail = "median held-out mDice distilled " + num(md, 4) + " vs seg-only " + num(ms, 4) + " (distilled/seg-only:" +
             per_seed + "), " + num(secs, 4) + " s (< 3600 s)";
  return o;
}

// ------------------------------------------------------------------ 7. metric oracles

Outcome metric_oracles() {
  std::mt19937_64 rng(707);
  std::bernoulli_distribution coin(0.5);
  std::size_t curve_mismatch = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    FeatureMap pred = oracle::random_pred(4, 4, rng), gt(1, 4, 4);
    if (trial % 2) {
      for (float& v : pred.data()) v = coin(rng) ? 1.0f : 0.0f;
    }
    for (float& v : gt.data()) v = coin(rng) ? 1.0f : 0.0f;
    const EvalPair pair = make_eval_pair(pred, gt);
    const auto p = oracle::to_grid(pair.pred), g = oracle::to_grid(pair.gt);
    const auto ref = oracle::dice_iou(p, g);
    const DiceIou got = dice_iou_curve(pair);
    curve_mismatch += got.dice != ref.dice || got.iou != ref.iou || mae(pair) != oracle::mae(p, g);
  }
  double s_err = 0, e_err = 0, f_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const EvalPair pair = make_eval_pair(oracle::random_pred(8, 8, rng), oracle::random_mask(8, 8, rng));
    const auto p = oracle::to_grid(pair.pred), g = oracle::to_grid(pair.gt);
    s_err = std::max(s_err, std::abs(s_measure(pair) - oracle::s_measure(p, g)));
    e_err = std::max(e_err, std::abs(e_measure_max(pair) - oracle::e_measure_max(p, g)));
    f_err = std::max(f_err, std::abs(weighted_f_beta(pair) - oracle::weighted_f(p, g)));
  }
  std::size_t out_of_range = 0;
  std::uniform_int_distribution<std::size_t> side(1, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t h = side(rng), w = side(rng);
    FeatureMap gt = oracle::random_mask(h, w, rng);
    if (trial % 10 == 0) gt = FeatureMap(1, h, w, trial % 20 ? 1.0f : 0.0f);
    const MetricReport r = evaluate_pair(make_eval_pair(oracle::random_pred(h, w, rng), gt));
    for (double v : {r.m_dice, r.m_iou, r.f_beta_w, r.s_alpha, r.e_phi_max, r.mae}) {
      out_of_range += !(v >= 0.0 && v <= 1.0);
    }
  }
  Outcome o;
  o.pass = curve_mismatch == 0 && s_err <= 1e-6 && e_err <= 1e-6 && f_err <= 1e-6 && out_of_range == 0;
  o.detail = "4x4 dice/iou/MAE mismatches " + std::to_string(curve_mismatch) + "/10000; 8x8 max |diff| S " +
             num(s_err) + ", E " + num(e_err) + ", Fw " + num(f_err) + " (<= 1e-6); out-of-range values " +
             std::to_string(out_of_range) + " in 1000-case fuzz";
  return o;
}

// ------------------------------------------------------------------ 8. formats

template <class Decode>
std::size_t fuzz(const std::vector<std::uint8_t>& good, Decode decode, std::mt19937_64& rng, std::size_t& structured) {
  std::size_t other = 0;
  auto attempt = [&](const std::vector<std::uint8_t>& bytes) {
    try {
      decode(bytes);
    } catch (const FormatError&) {
      ++structured;
    } catch (...) {
      ++other;
    }
  };
  for (std::size_t len = 0; len < good.size(); ++len) attempt({good.begin(), good.begin() + len});
  std::uniform_int_distribution<std::size_t> pos(0, good.size() - 1);
  std::uniform_int_distribution<int> byte(0, 255), count(1, 8);
  for (int trial = 0; trial < 3000; ++trial) {
    auto bytes = good;
    for (int k = count(rng); k > 0; --k) bytes[pos(rng)] = static_cast<std::uint8_t>(byte(rng));
    attempt(bytes);
  }
  for (std::size_t off = 0; off + 4 <= std::min<std::size_t>(good.size(), 64); off += 4) {
    auto bytes = good;
    std::fill_n(bytes.begin() + static_cast<std::ptrdiff_t>(off), 4, 0xFF);
    attempt(bytes);
  }
  return other;
}

Outcome format_round_trips() {
  std::mt19937_64 rng(808);
  std::normal_distribution<float> n(0.0f, 3.0f);
  const fs::path dir = fs::temp_directory_path() / ("difom_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);

  std::vector<TeacherRecord> records = {{"sam-vit-b", FeatureMap(64, 16, 16)}, {"dinov2-small", FeatureMap(24, 37, 37)},
                                        {"x", FeatureMap(1, 1, 1)}};
  for (auto& r : records)
    for (float& v : r.features.data()) v = n(rng);
  records[2].features.data()[0] = -0.0f;
  write_bundle(records, dir / "b.dfom");
  const auto back = read_records(dir / "b.dfom");
  bool bundle_exact = back.size() == records.size();
  for (std::size_t i = 0; bundle_exact && i < records.size(); ++i) {
    bundle_exact = back[i].model_id == records[i].model_id && back[i].features.channels() == records[i].features.channels() &&
                   back[i].features.height() == records[i].features.height() &&
                   std::memcmp(back[i].features.data().data(), records[i].features.data().data(),
                               records[i].features.size() * sizeof(float)) == 0;
  }

  StudentNet model(ModelConfig::desk(), 8);
  const auto params = model.parameters();
  save_checkpoint(dir / "m.dfck", params);
  const auto tensors = read_checkpoint(dir / "m.dfck");
  bool ckpt_exact = tensors.size() == params.size();
  for (std::size_t i = 0; ckpt_exact && i < params.size(); ++i) {
    ckpt_exact = tensors[i].name == params[i]->name && tensors[i].value.shape() == params[i]->value.shape() &&
                 std::memcmp(tensors[i].value.data().data(), params[i]->value.data().data(),
                             params[i]->value.numel() * sizeof(float)) == 0;
  }
  StudentNet other(ModelConfig::desk(), 9);
  load_checkpoint(dir / "m.dfck", other.parameters());
  const auto reloaded = other.parameters();
  for (std::size_t i = 0; ckpt_exact && i < params.size(); ++i) {
    ckpt_exact = std::memcmp(reloaded[i]->value.data().data(), params[i]->value.data().data(),
                             params[i]->value.numel() * sizeof(float)) == 0;
  }

  std::vector<TeacherRecord> small = {{"a", FeatureMap(2, 3, 2, 0.5f)}, {"bb", FeatureMap(1, 2, 2, -1.0f)}};
  std::vector<NamedTensor> small_ck = {{"w", Tensor4({2, 1, 3, 3}, 0.25f)}, {"b", Tensor4({1, 2, 1, 1}, -1.0f)}};
  std::size_t structured = 0;
  const std::size_t crashes =
      fuzz(encode_records(small), [](const auto& b) { decode_records(b); }, rng, structured) +
      fuzz(encode_checkpoint(small_ck), [](const auto& b) { decode_checkpoint(b); }, rng, structured);
  bool missing_is_io = false;
  try {
    read_records(dir / "absent.dfom");
  } catch (const FormatError& e) {
    missing_is_io = e.kind() == FormatError::Kind::Io;
  }
  fs::remove_all(dir);

  Outcome o;
  o.pass = bundle_exact && ckpt_exact && crashes == 0 && structured > 0 && missing_is_io;
  o.detail = std::string("DFOM ") + (bundle_exact ? "bit-exact" : "MISMATCH") + ", DFCK " +
             (ckpt_exact ? "bit-exact" : "MISMATCH") + "; fuzz: " + std::to_string(structured) +
             " structured errors, " + std::to_string(crashes) + " other failures";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DiFoM acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria (1-8)")->delimiter(',')->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no time bound stated
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "Spectral invariants", 30, spectral_invariants},
      {2, "Gradient suite", 120, gradient_suite},
      {3, "Loss-formula fidelity", 0, loss_fidelity},
      {4, "Phase-schedule integrity", 0, phase_schedule},
      {5, "Overfit check", 300, overfit_check},
      {6, "Directional distillation benefit", 3600, distillation_benefit},
      {7, "Metric-suite oracle equivalence", 0, metric_oracles},
      {8, "Format round trips", 0, format_round_trips},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.budget_s > 0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += "; over time budget";
    }
    failures += !o.pass;
    std::printf("%s [%d] %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
