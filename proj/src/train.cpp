// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "difom/checkpoint.hpp"

namespace difom {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Tensor4 stack(const std::vector<FeatureMap>& maps) {
  std::vector<const FeatureMap*> ptrs;
  for (const FeatureMap& m : maps) ptrs.push_back(&m);
  return stack_maps(ptrs);
}

}  // namespace

void adam_step(std::span<Parameter* const> params, AdamState& st, double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("adam: learning rate must be positive");
  if (std::none_of(params.begin(), params.end(), [](const Parameter* p) { return p->grad_ready; })) {
    throw std::logic_error("adam: no parameter has a gradient; run backward() first");
  }
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(st.beta1, t), c2 = 1.0 - std::pow(st.beta2, t);
  for (Parameter* p : params) {
    const bool ready = p->grad_ready;
    p->grad_ready = false;
    if (!ready || !p->trainable) continue;
    auto& mom = st.moments[p];
    const std::size_t n = p->value.numel();
    if (mom.m.size() != n) {
      mom.m.assign(n, 0.0f);
      mom.v.assign(n, 0.0f);
    }
    auto w = p->value.data();
    const auto g = p->grad.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g[i];
      const double m = st.beta1 * mom.m[i] + (1.0 - st.beta1) * gi;
      const double v = st.beta2 * mom.v[i] + (1.0 - st.beta2) * gi * gi;
      mom.m[i] = static_cast<float>(m);
      mom.v[i] = static_cast<float>(v);
      w[i] = static_cast<float>(w[i] - lr * (m / c1) / (std::sqrt(v / c2) + st.eps));
    }
  }
}

TeacherProvider::TeacherProvider(TeacherSource source, FusionOptions fusion, double cutoff)
    : source_(std::move(source)),
      fusion_(fusion),
      masks_(make_radial_masks(fusion.resolution, fusion.resolution, cutoff)) {}

TeacherBundle TeacherProvider::load(const SegmentationSample& sample) {
  if (source_.kind == TeacherSource::Kind::Synthetic) {
    return synthesize_teachers(sample, source_.synth, source_.synth_seed ^ fnv1a(sample.id), fusion_);
  }
  return load_bundle(source_.directory / (sample.id + ".dfom"), fusion_);
}

const FrequencyComponents& TeacherProvider::targets(const SegmentationSample& sample) {
  ++requests_;
  if (auto it = cache_.find(sample.id); it != cache_.end()) return it->second;
  ++accesses_;
  const TeacherBundle bundle = load(sample);
  return cache_.emplace(sample.id, decompose(bundle.fused, masks_)).first->second;
}

std::size_t TeacherProvider::d_star(const SegmentationSample& sample) { return targets(sample).lfc.channels(); }

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.total_epochs = 60;
  c.phase1_end = 20;
  c.phase2_end = 40;
  c.learning_rate = 1e-3;
  return c;
}

void TrainConfig::validate() const {
  if (!(phase1_end > 0 && phase1_end < phase2_end && phase2_end <= total_epochs)) {
    throw std::invalid_argument("schedule must satisfy 0 < phase1_end < phase2_end <= total_epochs (got " +
                                std::to_string(phase1_end) + ", " + std::to_string(phase2_end) + ", " +
                                std::to_string(total_epochs) + ")");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (augment.scales.empty()) throw std::invalid_argument("augmentation needs at least one scale");
  for (double s : augment.scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("augmentation scales must be positive");
  }
  if (!(augment.flip_probability >= 0.0 && augment.flip_probability <= 1.0)) {
    throw std::invalid_argument("flip probability must lie in [0, 1]");
  }
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw std::invalid_argument("cutoff must lie in (0, 1)");
  weights.validate();
}

Phase TrainConfig::phase_of(std::size_t epoch) const {
  if (epoch < phase1_end) return Phase::I;
  if (epoch < phase2_end) return Phase::II;
  return Phase::III;
}

TrainResult run_training(const TrainConfig& config, StudentNet& model, std::span<const SegmentationSample> dataset,
                         TeacherProvider* teachers, const StepCallback& on_step) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("training set is empty");
  if (config.distillation && !model.config().distillation) {
    throw std::invalid_argument("distillation training needs a model with latents and projections");
  }
  if (config.distillation && !teachers) throw std::invalid_argument("distillation training needs a teacher source");
  const std::size_t size = model.config().input_size;
  for (const SegmentationSample& s : dataset) {
    validate_sample(s);
    if (s.image.height() != size || s.image.width() != size) {
      throw DimensionError("height", "sample " + s.id + " is " + std::to_string(s.image.height()) + "x" +
                                         std::to_string(s.image.width()) + ", model expects " + std::to_string(size));
    }
  }
  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

  TrainResult result;
  AdamState adam;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const auto params = model.parameters();
  const std::size_t accesses_at_start = teachers ? teachers->accesses() : 0;
  std::size_t step = 0;

  auto checkpoint = [&](const std::string& name) {
    if (config.checkpoint_dir.empty()) return;
    const auto path = config.checkpoint_dir / name;
    save_checkpoint(path, params);
    result.checkpoints.push_back(path);
  };

  try {
    for (std::size_t epoch = 0; epoch < config.total_epochs; ++epoch) {
      const Phase phase = config.phase_of(epoch);
      const bool distill = config.distillation && phase != Phase::I;
      if (epoch == config.phase1_end && config.distillation) {
        const std::size_t d = teachers->d_star(dataset.front());
        if (d != model.config().d_star) {
          throw DimensionError("d_star", "teacher bundle has d_star = " + std::to_string(d) +
                                             " but the model projects to " + std::to_string(model.config().d_star));
        }
      }
      if (epoch == config.phase2_end) model.set_trainable(ParamGroup::Encoder, false);
      std::shuffle(order.begin(), order.end(), rng);

      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        std::vector<FeatureMap> images, masks, lfc, hfc;
        for (std::size_t i = start; i < end; ++i) {
          const SegmentationSample& s = dataset[order[i]];
          const AugmentDraw draw = config.augmentation ? draw_augmentation(config.augment, rng) : AugmentDraw{};
          SegmentationSample a = apply_augmentation(s, draw);
          images.push_back(std::move(a.image));
          masks.push_back(std::move(a.mask));
          if (distill) {
            const FrequencyComponents& t = teachers->targets(s);
            lfc.push_back(transform_map(t.lfc, draw));
            hfc.push_back(transform_map(t.hfc, draw));
          }
        }

        Tape tape;
        auto [feats, lat] = model.encode(tape, tape.constant(stack(images)));
        Var pred = model.decode(tape, feats, lat);
        Var gt = tape.constant(stack(masks));
        Var dice = dice_loss(pred, gt), bce = bce_loss(pred, gt);
        StepRecord rec{step, epoch, phase, {}};
        Var total;
        if (distill) {
          ProjectedLatents proj = model.project_latents(tape, lat, lfc.front().channels());
          Var l1 = distill_l1(proj.l1, stack(lfc)), l2 = distill_l2(proj.l2, stack(hfc));
          total = phase_loss(phase, dice, bce, l1, l2, config.weights);
          rec.loss.l1_distill = l1.value().item();
          rec.loss.l2_distill = l2.value().item();
        } else if (phase == Phase::I) {
          total = phase_loss(phase, dice, bce, Var{}, Var{}, config.weights);
        } else {
          // Seg-only twin: the phase-II/III formula with both distillation terms removed.
          total = weighted_sum({dice, bce}, {config.weights.lambda1, config.weights.lambda1});
        }
        rec.loss.dice = dice.value().item();
        rec.loss.bce = bce.value().item();
        rec.loss.total = total.value().item();
        if (!std::isfinite(rec.loss.total)) {
          throw std::runtime_error("training diverged at step " + std::to_string(step) + " (non-finite loss)");
        }
        tape.backward(total);
        adam_step(params, adam, config.learning_rate);
        result.log.push_back(rec);
        if (on_step) on_step(rec, model);
        ++step;
      }

      if (epoch + 1 == config.phase1_end) {
        if (teachers) result.teacher_accesses_phase1 = teachers->accesses() - accesses_at_start;
        checkpoint("phase1.dfck");
      } else if (epoch + 1 == config.phase2_end && config.phase2_end < config.total_epochs) {
        checkpoint("phase2.dfck");
      }
    }
  } catch (...) {
    model.set_trainable(ParamGroup::Encoder, true);
    throw;
  }
  model.set_trainable(ParamGroup::Encoder, true);
  checkpoint("final.dfck");
  if (teachers) result.teacher_accesses = teachers->accesses() - accesses_at_start;
  if (!config.log_path.empty()) write_training_log(config.log_path, result.log);
  return result;
}

std::vector<FeatureMap> predict(StudentNet& model, std::span<const SegmentationSample> samples,
                                std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("predict: batch size must be >= 1");
  std::vector<FeatureMap> out;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<FeatureMap> images;
    for (std::size_t i = start; i < end; ++i) images.push_back(samples[i].image);
    Tape tape;
    const Tensor4& y = model.forward(tape, tape.constant(stack(images))).value();
    const std::size_t plane = y.shape().plane();
    for (std::size_t n = 0; n < end - start; ++n) {
      FeatureMap m(1, y.shape().h, y.shape().w);
      std::copy_n(y.data().begin() + static_cast<std::ptrdiff_t>(n * plane), plane, m.data().begin());
      out.push_back(std::move(m));
    }
  }
  return out;
}

void write_training_log(const std::filesystem::path& path, std::span<const StepRecord> log) {
  std::ostringstream os;
  os.precision(9);
  os << "step,phase,dice,bce,l1,l2,total\n";
  for (const StepRecord& r : log) {
    os << r.step << ',' << to_string(r.phase) << ',' << r.loss.dice << ',' << r.loss.bce << ',' << r.loss.l1_distill
       << ',' << r.loss.l2_distill << ',' << r.loss.total << '\n';
  }
  const std::string text = os.str();
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace difom
