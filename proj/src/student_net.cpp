// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/student_net.hpp"

#include <cmath>
#include <stdexcept>

namespace difom {

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.input_size = 352;
  c.channels = {64, 128, 256, 512};
  c.latent_channels = 256;
  c.d_star = 256;
  c.teacher_resolution = 32;
  return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

void ModelConfig::validate() const {
  if (channels.empty()) throw std::invalid_argument("model: channel ladder is empty");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] == 0) throw std::invalid_argument("model: channel counts must be >= 1");
    if (i > 0 && channels[i] <= channels[i - 1]) {
      throw std::invalid_argument("model: channel ladder must be strictly increasing");
    }
  }
  if (input_size == 0 || input_size % (std::size_t{1} << depth()) != 0) {
    throw std::invalid_argument("model: input size " + std::to_string(input_size) + " is not divisible by 2^" +
                                std::to_string(depth()));
  }
  if (distillation && (latent_channels == 0 || d_star == 0 || teacher_resolution == 0)) {
    throw std::invalid_argument("model: latent channels, d_star and teacher resolution must be >= 1");
  }
}

const char* to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::Encoder: return "encoder";
    case ParamGroup::Latent: return "latent";
    case ParamGroup::Projection: return "projection";
    case ParamGroup::Decoder: return "decoder";
  }
  return "?";
}

StudentNet::StudentNet(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(seed) {
  config_.validate();
  const auto& ch = config_.channels;
  const std::size_t depth = config_.depth();
  std::size_t c_in = 3;
  for (std::size_t s = 0; s < depth; ++s) {
    const std::string p = "enc" + std::to_string(s + 1);
    Conv a = add_conv(p + ".conv1", ParamGroup::Encoder, c_in, ch[s], 3);
    Conv b = add_conv(p + ".conv2", ParamGroup::Encoder, ch[s], ch[s], 3);
    encoder_.emplace_back(a, b);
    c_in = ch[s];
  }
  const std::size_t top = ch.back();
  if (config_.distillation) {
    const std::size_t lat = config_.latent_channels;
    latent1_ = add_conv("latent.l1", ParamGroup::Latent, top, lat, 1);
    latent2_ = add_conv("latent.l2", ParamGroup::Latent, lat, lat, 3);
    proj1_ = add_conv("proj.l1", ParamGroup::Projection, lat, config_.d_star, 1);
    proj2_ = add_conv("proj.l2", ParamGroup::Projection, lat, config_.d_star, 1);
    fuse_ = add_conv("bottleneck.fuse", ParamGroup::Decoder, top + 2 * lat, top, 1);
  }
  bottleneck1_ = add_conv("bottleneck.conv1", ParamGroup::Decoder, top, top, 3);
  bottleneck2_ = add_conv("bottleneck.conv2", ParamGroup::Decoder, top, top, 3);
  for (std::size_t s = depth - 1; s >= 1; --s) {
    const std::string p = "dec" + std::to_string(s);
    DecoderLevel lvl;
    lvl.up = add_conv(p + ".up", ParamGroup::Decoder, ch[s], ch[s - 1], 3);
    lvl.merge = add_conv(p + ".merge", ParamGroup::Decoder, 2 * ch[s - 1], ch[s - 1], 3);
    lvl.refine = add_conv(p + ".refine", ParamGroup::Decoder, ch[s - 1], ch[s - 1], 3);
    decoder_.push_back(lvl);
  }
  final_up_ = add_conv("head.up", ParamGroup::Decoder, ch[0], ch[0], 3);
  head_ = add_conv("head.out", ParamGroup::Decoder, ch[0], 1, 1);
}

StudentNet::Conv StudentNet::add_conv(const std::string& name, ParamGroup group, std::size_t c_in, std::size_t c_out,
                                      std::size_t k) {
  // He-uniform weights, zero bias.
  const double bound = std::sqrt(6.0 / static_cast<double>(c_in * k * k));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor4 w({c_out, c_in, k, k});
  for (float& v : w.data()) v = static_cast<float>(u(rng_));
  params_.emplace_back(name + ".weight", std::move(w));
  groups_.push_back(group);
  Parameter* wp = &params_.back();
  params_.emplace_back(name + ".bias", Tensor4({1, c_out, 1, 1}));
  groups_.push_back(group);
  return Conv{wp, &params_.back(), k / 2};
}

Var StudentNet::apply(Tape& tape, const Conv& conv, Var x, bool activate) {
  Var y = conv2d(x, tape.param(*conv.w), tape.param(*conv.b), 1, conv.pad);
  return activate ? relu(y) : y;
}

Tensor4 standardize(const Tensor4& image) {
  constexpr double kFloor = 1e-3;
  Tensor4 out = image;
  const Shape4 s = image.shape();
  const std::size_t plane = s.h * s.w;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      float* p = out.data().data() + (n * s.c + c) * plane;
      double mean = 0, sq = 0;
      for (std::size_t i = 0; i < plane; ++i) mean += p[i];
      mean /= static_cast<double>(plane);
      for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
      const double inv = 1.0 / std::max(std::sqrt(sq / static_cast<double>(plane)), kFloor);
      for (std::size_t i = 0; i < plane; ++i) p[i] = static_cast<float>((p[i] - mean) * inv);
    }
  }
  return out;
}

std::pair<EncoderFeatures, StudentLatents> StudentNet::encode(Tape& tape, Var image) {
  const Shape4 s = image.shape();
  if (s.c != 3) throw DimensionError("channels", "student: image must have 3 channels, got " + std::to_string(s.c));
  if (s.h != config_.input_size) {
    throw DimensionError("height", "student: image height " + std::to_string(s.h) + " != input size " +
                                       std::to_string(config_.input_size));
  }
  if (s.w != config_.input_size) {
    throw DimensionError("width", "student: image width " + std::to_string(s.w) + " != input size " +
                                      std::to_string(config_.input_size));
  }
  for (float v : image.value().data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("student: image values must lie in [0, 1]");
  }
  EncoderFeatures feats;
  Var x = config_.standardize_input ? tape.constant(standardize(image.value())) : image;
  for (const auto& [a, b] : encoder_) {
    x = apply(tape, b, apply(tape, a, maxpool2(x)));
    feats.f.push_back(x);
  }
  StudentLatents lat;
  if (config_.distillation) {
    lat.l1 = apply(tape, latent1_, x);
    lat.l2 = apply(tape, latent2_, lat.l1);
  }
  return {std::move(feats), lat};
}

ProjectedLatents StudentNet::project_latents(Tape& tape, const StudentLatents& latents, std::size_t d_star) {
  if (!config_.distillation) throw std::logic_error("student: the vanilla twin has no latent projections");
  if (d_star != config_.d_star) {
    throw DimensionError("d_star", "student: projections map to " + std::to_string(config_.d_star) +
                                       " channels but the teacher bundle has d_star = " + std::to_string(d_star));
  }
  if (!latents.l1.valid() || !latents.l2.valid()) throw std::invalid_argument("student: latents were not computed");
  const std::size_t r = config_.teacher_resolution;
  return {bilinear_resize(apply(tape, proj1_, latents.l1, false), r, r),
          bilinear_resize(apply(tape, proj2_, latents.l2, false), r, r)};
}

Var StudentNet::decode(Tape& tape, const EncoderFeatures& features, const StudentLatents& latents) {
  const std::size_t depth = config_.depth();
  if (features.f.size() != depth) {
    throw DimensionError("stages", "student: expected " + std::to_string(depth) + " encoder stages, got " +
                                       std::to_string(features.f.size()));
  }
  for (std::size_t i = 0; i < depth; ++i) {
    const Shape4 s = features.f[i].shape();
    if (s.c != config_.channels[i] || s.h != config_.stage_size(i + 1) || s.w != config_.stage_size(i + 1)) {
      throw DimensionError("f" + std::to_string(i + 1), "student: encoder feature " + std::to_string(i + 1) +
                                                            " has shape " + s.str());
    }
  }
  Var x = features.f.back();
  if (config_.distillation) {
    if (!latents.l1.valid() || !latents.l2.valid()) throw std::invalid_argument("student: latents were not computed");
    x = apply(tape, fuse_, concat_channels({x, latents.l1, latents.l2}));
  }
  x = apply(tape, bottleneck2_, apply(tape, bottleneck1_, x));
  for (std::size_t k = 0; k < decoder_.size(); ++k) {
    const DecoderLevel& lvl = decoder_[k];
    const Var skip = features.f[depth - 2 - k];
    x = apply(tape, lvl.up, upsample2(x));
    x = apply(tape, lvl.refine, apply(tape, lvl.merge, concat_channels({x, skip})));
  }
  x = apply(tape, final_up_, upsample2(x));
  return sigmoid(apply(tape, head_, x, false));
}

Var StudentNet::forward(Tape& tape, Var image) {
  auto [feats, lat] = encode(tape, image);
  return decode(tape, feats, lat);
}

std::vector<Parameter*> StudentNet::parameters() {
  std::vector<Parameter*> out;
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::vector<Parameter*> StudentNet::parameters(ParamGroup group) {
  std::vector<Parameter*> out;
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (groups_[i] == group) out.push_back(&params_[i]);
  return out;
}

std::size_t StudentNet::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.numel();
  return n;
}

std::size_t StudentNet::parameter_count(ParamGroup group) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (groups_[i] == group) n += params_[i].value.numel();
  return n;
}

Parameter& StudentNet::parameter(const std::string& name) {
  for (Parameter& p : params_)
    if (p.name == name) return p;
  throw std::out_of_range("student: no parameter named '" + name + "'");
}

void StudentNet::set_trainable(ParamGroup group, bool trainable) {
  for (Parameter* p : parameters(group)) p->trainable = trainable;
}

}  // namespace difom
