// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "difom/autodiff.hpp"

namespace difom {

struct ModelConfig {
  std::size_t input_size = 64;
  std::vector<std::size_t> channels = {8, 16, 32, 64};  // C_1 .. C_depth, strictly increasing
  std::size_t latent_channels = 16;
  std::size_t d_star = 8;               // teacher channel count the projections map to
  std::size_t teacher_resolution = 8;   // H' = W' of projected latents
  bool distillation = true;             // false: vanilla twin without latents or projections
  bool standardize_input = true;        // per-image, per-channel zero mean / unit variance

  /// 352 x 352 input, ladder {64, 128, 256, 512}, 256 latent channels.
  static ModelConfig paper();
  /// 64 x 64 input, ladder {8, 16, 32, 64}.
  static ModelConfig desk();

  std::size_t depth() const noexcept { return channels.size(); }
  /// Side length of f_i (1-based stage index).
  std::size_t stage_size(std::size_t stage) const noexcept { return input_size >> stage; }
  void validate() const;
};

struct EncoderFeatures {
  std::vector<Var> f;  // f[i - 1] is stage i
};

struct StudentLatents {
  Var l1;  // semantic
  Var l2;  // structural, computed from l1
};

struct ProjectedLatents {
  Var l1;
  Var l2;
};

enum class ParamGroup { Encoder, Latent, Projection, Decoder };
const char* to_string(ParamGroup group);

/// Per-sample, per-channel standardisation; the deviation is floored at 1e-3.
Tensor4 standardize(const Tensor4& image);

/// U-Net style student with dual bottleneck latents.
class StudentNet {
 public:
  StudentNet(ModelConfig config, std::uint64_t seed);
  StudentNet(const StudentNet&) = delete;
  StudentNet& operator=(const StudentNet&) = delete;

  const ModelConfig& config() const noexcept { return config_; }

  /// image: (N, 3, S, S) with values in [0, 1]. Latents are invalid Vars for the vanilla twin.
  std::pair<EncoderFeatures, StudentLatents> encode(Tape& tape, Var image);
  /// 1x1 maps to d_star channels, then bilinear resize to teacher_resolution.
  ProjectedLatents project_latents(Tape& tape, const StudentLatents& latents, std::size_t d_star);
  /// Probability map (N, 1, S, S).
  Var decode(Tape& tape, const EncoderFeatures& features, const StudentLatents& latents);
  Var forward(Tape& tape, Var image);

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> parameters(ParamGroup group);
  std::size_t parameter_count() const;
  std::size_t parameter_count(ParamGroup group) const;
  Parameter& parameter(const std::string& name);
  void set_trainable(ParamGroup group, bool trainable);

 private:
  struct Conv {
    Parameter* w = nullptr;
    Parameter* b = nullptr;
    std::size_t pad = 0;
  };
  Conv add_conv(const std::string& name, ParamGroup group, std::size_t c_in, std::size_t c_out, std::size_t k);
  Var apply(Tape& tape, const Conv& conv, Var x, bool activate = true);

  ModelConfig config_;
  std::mt19937_64 rng_;
  std::deque<Parameter> params_;
  std::vector<ParamGroup> groups_;

  std::vector<std::pair<Conv, Conv>> encoder_;  // per stage
  Conv latent1_, latent2_, fuse_;
  Conv proj1_, proj2_;
  Conv bottleneck1_, bottleneck2_;
  struct DecoderLevel {
    Conv up, merge, refine;
  };
  std::vector<DecoderLevel> decoder_;  // stage depth-1 down to 1
  Conv final_up_, head_;
};

}  // namespace difom
