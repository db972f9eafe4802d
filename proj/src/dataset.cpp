// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace difom {

namespace {

struct Ellipse {
  double cy, cx, ry, rx, angle;

  // Normalised radial coordinate: < 1 inside.
  double radius(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (c * dx + s * dy) / rx, v = (-s * dx + c * dy) / ry;
    return std::sqrt(u * u + v * v);
  }
};

struct Wave {
  double ky, kx, phase, amp;
};

}  // namespace

std::vector<SegmentationSample> make_synthetic_dataset(const SyntheticDataOptions& opt) {
  if (opt.size < 8) throw std::invalid_argument("synthetic images must be at least 8 pixels wide");
  if (!(opt.contrast >= 0.0 && opt.contrast <= 0.5)) throw std::invalid_argument("contrast must lie in [0, 0.5]");
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double size = static_cast<double>(opt.size);
  const double base[3] = {0.62, 0.38, 0.33};
  std::vector<SegmentationSample> out;
  out.reserve(opt.count);
  for (std::size_t k = 0; k < opt.count; ++k) {
    SegmentationSample s{"synth_" + std::to_string(k), FeatureMap(3, opt.size, opt.size),
                         FeatureMap(1, opt.size, opt.size)};
    std::vector<Ellipse> polyps;
    std::size_t area = 0;
    do {
      polyps.clear();
      const int n = 1 + static_cast<int>(u(rng) * 3.0);
      for (int i = 0; i < n; ++i) {
        const double ry = size * (0.08 + 0.14 * u(rng)), rx = size * (0.08 + 0.14 * u(rng));
        polyps.push_back({ry + (size - 2 * ry) * u(rng), rx + (size - 2 * rx) * u(rng), ry, rx,
                          std::numbers::pi * u(rng)});
      }
      area = 0;
      for (std::size_t y = 0; y < opt.size; ++y)
        for (std::size_t x = 0; x < opt.size; ++x) {
          bool in = false;
          for (const Ellipse& e : polyps) in |= e.radius(y + 0.5, x + 0.5) < 1.0;
          s.mask.at(0, y, x) = in ? 1.0f : 0.0f;
          area += in;
        }
    } while (area == 0 || 2 * area >= opt.size * opt.size);

    // Stationary texture: a few random plane waves plus white noise, shared by polyp and background.
    std::vector<Wave> waves(4);
    for (Wave& w : waves) {
      const double freq = (1.0 + 5.0 * u(rng)) * 2.0 * std::numbers::pi / size, dir = 2.0 * std::numbers::pi * u(rng);
      w = {freq * std::sin(dir), freq * std::cos(dir), 2.0 * std::numbers::pi * u(rng), 0.006 + 0.008 * u(rng)};
    }
    std::normal_distribution<double> noise(0.0, 0.015);
    const double tint = 0.08 * (u(rng) - 0.5);
    for (std::size_t y = 0; y < opt.size; ++y)
      for (std::size_t x = 0; x < opt.size; ++x) {
        double tex = 0.0;
        for (const Wave& w : waves) tex += w.amp * std::sin(w.ky * y + w.kx * x + w.phase);
        // Soft polyp weight: 1 deep inside, fading to 0 over the outer edge band.
        double weight = 0.0;
        for (const Ellipse& e : polyps) {
          const double r = e.radius(y + 0.5, x + 0.5);
          weight = std::max(weight, std::clamp((1.15 - r) / 0.3, 0.0, 1.0));
        }
        for (std::size_t c = 0; c < 3; ++c) {
          const double v = base[c] + tint + tex + noise(rng) + opt.contrast * weight * (c == 0 ? 1.0 : 0.6);
          s.image.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    out.push_back(std::move(s));
  }
  return out;
}

FeatureMap flip_horizontal(const FeatureMap& m) {
  FeatureMap out(m.channels(), m.height(), m.width());
  for (std::size_t c = 0; c < m.channels(); ++c)
    for (std::size_t y = 0; y < m.height(); ++y)
      for (std::size_t x = 0; x < m.width(); ++x) out.at(c, y, m.width() - 1 - x) = m.at(c, y, x);
  return out;
}

FeatureMap flip_vertical(const FeatureMap& m) {
  FeatureMap out(m.channels(), m.height(), m.width());
  for (std::size_t c = 0; c < m.channels(); ++c)
    for (std::size_t y = 0; y < m.height(); ++y)
      for (std::size_t x = 0; x < m.width(); ++x) out.at(c, m.height() - 1 - y, x) = m.at(c, y, x);
  return out;
}

FeatureMap resize_nearest(const FeatureMap& m, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw DimensionError("height", "resize target must be non-empty");
  if (height == m.height() && width == m.width()) return m;
  FeatureMap out(m.channels(), height, width);
  auto src = [](std::size_t o, std::size_t in, std::size_t n) {
    return std::min(in - 1, static_cast<std::size_t>((static_cast<double>(o) + 0.5) * in / n));
  };
  for (std::size_t c = 0; c < m.channels(); ++c)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        out.at(c, y, x) = m.at(c, src(y, m.height(), height), src(x, m.width(), width));
  return out;
}

FeatureMap center_fit(const FeatureMap& m, std::size_t height, std::size_t width) {
  FeatureMap out(m.channels(), height, width);
  const long oy = (static_cast<long>(m.height()) - static_cast<long>(height)) / 2;
  const long ox = (static_cast<long>(m.width()) - static_cast<long>(width)) / 2;
  for (std::size_t c = 0; c < m.channels(); ++c)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const long sy = static_cast<long>(y) + oy, sx = static_cast<long>(x) + ox;
        if (sy >= 0 && sx >= 0 && sy < static_cast<long>(m.height()) && sx < static_cast<long>(m.width())) {
          out.at(c, y, x) = m.at(c, sy, sx);
        }
      }
  return out;
}

AugmentDraw draw_augmentation(const AugmentConfig& config, std::mt19937_64& rng) {
  if (config.scales.empty()) throw std::invalid_argument("augmentation needs at least one scale");
  std::bernoulli_distribution flip(config.flip_probability);
  AugmentDraw d;
  d.hflip = flip(rng);
  d.vflip = flip(rng);
  std::uniform_int_distribution<std::size_t> pick(0, config.scales.size() - 1);
  d.scale = config.scales[pick(rng)];
  return d;
}

SegmentationSample apply_augmentation(const SegmentationSample& s, const AugmentDraw& d) {
  if (!(d.scale > 0.0)) throw std::invalid_argument("augmentation scale must be positive");
  SegmentationSample out = s;
  if (d.hflip) {
    out.image = flip_horizontal(out.image);
    out.mask = flip_horizontal(out.mask);
  }
  if (d.vflip) {
    out.image = flip_vertical(out.image);
    out.mask = flip_vertical(out.mask);
  }
  const std::size_t h = s.image.height(), w = s.image.width();
  const auto sh = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(d.scale * h)));
  const auto sw = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(d.scale * w)));
  if (sh != h || sw != w) {
    out.image = center_fit(resize_bilinear(out.image, sh, sw), h, w);
    out.mask = center_fit(resize_nearest(out.mask, sh, sw), h, w);
    for (float& v : out.image.data()) v = std::clamp(v, 0.0f, 1.0f);
  }
  return out;
}

FeatureMap transform_map(const FeatureMap& m, const AugmentDraw& d) {
  if (!(d.scale > 0.0)) throw std::invalid_argument("augmentation scale must be positive");
  FeatureMap out = d.hflip ? flip_horizontal(m) : m;
  if (d.vflip) out = flip_vertical(out);
  const std::size_t h = m.height(), w = m.width();
  const auto sh = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(d.scale * h)));
  const auto sw = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(d.scale * w)));
  if (sh != h || sw != w) out = center_fit(resize_bilinear(out, sh, sw), h, w);
  return out;
}

SegmentationSample augment(const SegmentationSample& s, const AugmentConfig& config, std::mt19937_64& rng) {
  return apply_augmentation(s, draw_augmentation(config, rng));
}

}  // namespace difom
