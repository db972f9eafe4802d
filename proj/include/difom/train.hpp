// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "difom/dataset.hpp"
#include "difom/objectives.hpp"
#include "difom/spectral.hpp"
#include "difom/student_net.hpp"
#include "difom/teacher_io.hpp"

namespace difom {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  struct Moments {
    std::vector<float> m, v;
  };
  std::unordered_map<const Parameter*, Moments> moments;
};

/// Bias-corrected Adam update of every trainable parameter whose gradient is
/// ready; clears the ready flags. Throws std::logic_error if no gradient is ready.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr);

/// Where phase II/III teacher features come from.
struct TeacherSource {
  enum class Kind { Synthetic, Directory };
  Kind kind = Kind::Synthetic;
  SynthTeacherSpec synth = default_synth_spec();
  std::uint64_t synth_seed = 0;
  std::filesystem::path directory;  // <directory>/<sample id>.dfom
};

/// Fused-and-decomposed teacher targets per sample id, computed once and cached.
class TeacherProvider {
 public:
  TeacherProvider(TeacherSource source, FusionOptions fusion, double cutoff);

  const FrequencyComponents& targets(const SegmentationSample& sample);
  /// Channel count of the fused representation, probed from `sample`.
  std::size_t d_star(const SegmentationSample& sample);

  std::size_t accesses() const noexcept { return accesses_; }  // bundle loads or syntheses
  std::size_t requests() const noexcept { return requests_; }
  std::size_t cached() const noexcept { return cache_.size(); }

 private:
  TeacherBundle load(const SegmentationSample& sample);

  TeacherSource source_;
  FusionOptions fusion_;
  RadialMaskPair masks_;
  std::unordered_map<std::string, FrequencyComponents> cache_;
  std::size_t accesses_ = 0;
  std::size_t requests_ = 0;
};

struct TrainConfig {
  std::size_t total_epochs = 120;
  std::size_t phase1_end = 40;
  std::size_t phase2_end = 80;
  double learning_rate = 1e-4;
  std::size_t batch_size = 4;
  AugmentConfig augment;
  bool augmentation = true;
  std::uint64_t seed = 0;
  double cutoff = kDefaultCutoff;
  LossWeights weights;
  /// false trains the seg-only twin: identical schedule, no distillation terms, no teacher access.
  bool distillation = true;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::filesystem::path log_path;        // empty: no CSV log

  /// Epoch schedule 120 with boundaries 40 / 80, lr 1e-4.
  static TrainConfig paper();
  /// 60 epochs with boundaries 20 / 40.
  static TrainConfig desk();
  void validate() const;
  Phase phase_of(std::size_t epoch) const;
};

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  Phase phase = Phase::I;
  LossBreakdown loss;
};

struct TrainResult {
  std::vector<StepRecord> log;
  std::vector<std::filesystem::path> checkpoints;
  std::size_t teacher_accesses_phase1 = 0;
  std::size_t teacher_accesses = 0;
};

using StepCallback = std::function<void(const StepRecord&, StudentNet&)>;

/// Three-phase training. `teachers` may be null only when distillation is off.
TrainResult run_training(const TrainConfig& config, StudentNet& model, std::span<const SegmentationSample> dataset,
                         TeacherProvider* teachers, const StepCallback& on_step = {});

/// Probability maps (1 x S x S) for each sample, batched.
std::vector<FeatureMap> predict(StudentNet& model, std::span<const SegmentationSample> samples,
                                std::size_t batch_size = 8);

void write_training_log(const std::filesystem::path& path, std::span<const StepRecord> log);

}  // namespace difom
