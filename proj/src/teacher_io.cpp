// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/teacher_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace difom {

namespace {

constexpr std::string_view kMagic = "DFOM";

FormatError invalid(const std::string& what) { return FormatError(FormatError::Kind::Invalid, what); }

void zscore_in_place(FeatureMap& m) {
  double mean = 0.0;
  for (float v : m.data()) mean += v;
  mean /= static_cast<double>(m.size());
  double var = 0.0;
  for (float v : m.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(m.size());
  // A constant record has no scale to normalise; it is only centred.
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (float& v : m.data()) v = static_cast<float>((v - mean) * inv);
}

FeatureMap gaussian_blur(const FeatureMap& m, double sigma) {
  if (sigma <= 0.0) return m;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= total;
  const int h = static_cast<int>(m.height()), w = static_cast<int>(m.width());
  auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
  FeatureMap tmp(m.channels(), m.height(), m.width()), out(m.channels(), m.height(), m.width());
  for (std::size_t c = 0; c < m.channels(); ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * m.at(c, y, clampi(x + i, w));
        tmp.at(c, y, x) = static_cast<float>(acc);
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(c, clampi(y + i, h), x);
        out.at(c, y, x) = static_cast<float>(acc);
      }
  }
  return out;
}

// 3x3 morphological gradient (dilation minus erosion); zero wherever the
// neighbourhood is uniform, so it is supported within one pixel of a level change.
FeatureMap morphological_gradient(const FeatureMap& m) {
  const int h = static_cast<int>(m.height()), w = static_cast<int>(m.width());
  FeatureMap out(1, m.height(), m.width());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float lo = std::numeric_limits<float>::infinity(), hi = -lo;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          lo = std::min(lo, m.at(0, yy, xx));
          hi = std::max(hi, m.at(0, yy, xx));
        }
      out.at(0, y, x) = hi - lo;
    }
  return out;
}

// Sobel magnitude restricted to the morphological-gradient support.
FeatureMap sobel_magnitude(const FeatureMap& m, const FeatureMap& support) {
  const int h = static_cast<int>(m.height()), w = static_cast<int>(m.width());
  auto px = [&](int y, int x) { return m.at(0, std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); };
  FeatureMap out(1, m.height(), m.width());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (support.at(0, y, x) == 0.0f) continue;
      const double gx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
      const double gy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
      out.at(0, y, x) = static_cast<float>(std::sqrt(gx * gx + gy * gy) / 4.0);
    }
  return out;
}

}  // namespace

void validate_record(const TeacherRecord& r) {
  if (r.model_id.empty()) throw invalid("teacher record has an empty model_id");
  if (r.model_id.size() > kMaxModelIdBytes) {
    throw invalid("model_id '" + r.model_id.substr(0, 16) + "...' exceeds " + std::to_string(kMaxModelIdBytes) +
                  " bytes");
  }
  const FeatureMap& f = r.features;
  if (f.channels() == 0 || f.height() == 0 || f.width() == 0) {
    throw FormatError(FormatError::Kind::ZeroDim, "teacher record '" + r.model_id + "' has a zero dimension");
  }
  for (float v : f.data()) {
    if (!std::isfinite(v)) {
      throw FormatError(FormatError::Kind::NonFinite, "teacher record '" + r.model_id + "' holds a non-finite value");
    }
  }
}

std::vector<std::uint8_t> encode_records(std::span<const TeacherRecord> records) {
  if (records.empty()) throw invalid("a teacher bundle must contain at least one record");
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kBundleVersion);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const TeacherRecord& r : records) {
    validate_record(r);
    w.str(r.model_id);
    w.u32(static_cast<std::uint32_t>(r.features.height()));
    w.u32(static_cast<std::uint32_t>(r.features.width()));
    w.u32(static_cast<std::uint32_t>(r.features.channels()));
    w.f32_array(r.features.data());
  }
  return w.bytes();
}

std::vector<TeacherRecord> decode_records(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kBundleVersion) {
    throw FormatError(FormatError::Kind::UnsupportedVersion, "DFOM version " + std::to_string(version) +
                                                                 " is not supported (expected " +
                                                                 std::to_string(kBundleVersion) + ")");
  }
  const std::uint32_t count = r.u32();
  if (count == 0) throw invalid("DFOM bundle declares zero records");
  std::vector<TeacherRecord> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    TeacherRecord rec;
    rec.model_id = r.str(kMaxModelIdBytes);
    const std::uint64_t h = r.u32(), w = r.u32(), d = r.u32();
    if (h == 0 || w == 0 || d == 0) {
      throw FormatError(FormatError::Kind::ZeroDim, "record " + std::to_string(i) + " has a zero dimension");
    }
    // Each factor < 2^32, so h*w fits; guard the final product against the remaining payload.
    const std::uint64_t hw = h * w;
    if (d > r.remaining() / 4 || hw > r.remaining() / 4 / d) {
      throw FormatError(FormatError::Kind::Truncated, "record " + std::to_string(i) + " payload is truncated");
    }
    std::vector<float> payload;
    r.f32_array(static_cast<std::size_t>(hw * d), payload);
    rec.features = FeatureMap(d, h, w);
    std::copy(payload.begin(), payload.end(), rec.features.data().begin());
    if (rec.model_id.empty()) throw invalid("record " + std::to_string(i) + " has an empty model_id");
    validate_record(rec);
    out.push_back(std::move(rec));
  }
  if (r.remaining() != 0) {
    throw invalid("DFOM bundle has " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return out;
}

void write_bundle(std::span<const TeacherRecord> records, const std::filesystem::path& path) {
  write_file_atomic(path, encode_records(records));
}

std::vector<TeacherRecord> read_records(const std::filesystem::path& path) { return decode_records(read_file(path)); }

TeacherBundle fuse(std::vector<TeacherRecord> records, const FusionOptions& options) {
  if (records.empty()) throw invalid("cannot fuse an empty record list");
  if (options.resolution == 0) throw DimensionError("height", "fusion resolution must be >= 1");
  TeacherBundle b;
  for (const TeacherRecord& r : records) b.d_star += r.features.channels();
  const std::size_t res = options.resolution;
  b.fused = FeatureMap(b.d_star, res, res);
  std::size_t offset = 0;
  for (const TeacherRecord& r : records) {
    validate_record(r);
    FeatureMap resized = resize_bilinear(r.features, res, res);
    if (options.zscore) zscore_in_place(resized);
    std::copy(resized.data().begin(), resized.data().end(),
              b.fused.data().begin() + static_cast<std::ptrdiff_t>(offset * res * res));
    offset += resized.channels();
  }
  b.records = std::move(records);
  return b;
}

TeacherBundle load_bundle(const std::filesystem::path& path, const FusionOptions& options) {
  return fuse(read_records(path), options);
}

std::size_t SynthTeacherSpec::total_channels() const {
  std::size_t n = 0;
  for (const Model& m : models) n += m.channels;
  return n;
}

SynthTeacherSpec default_synth_spec(double noise_sigma) {
  SynthTeacherSpec s;
  s.models = {{"synth-a", 4, 16}, {"synth-b", 4, 8}};
  s.noise_sigma = noise_sigma;
  return s;
}

FeatureMap downsample_mask(const FeatureMap& mask, std::size_t res) {
  if (mask.channels() != 1) throw DimensionError("channels", "downsample_mask expects a single channel");
  if (res == 0) throw DimensionError("height", "downsample resolution must be >= 1");
  const std::size_t h = mask.height(), w = mask.width();
  if (h % res != 0 || w % res != 0) return resize_bilinear(mask, res, res);
  const std::size_t by = h / res, bx = w / res;
  FeatureMap out(1, res, res);
  for (std::size_t y = 0; y < res; ++y)
    for (std::size_t x = 0; x < res; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < by; ++i)
        for (std::size_t j = 0; j < bx; ++j) acc += mask.at(0, y * by + i, x * bx + j);
      out.at(0, y, x) = static_cast<float>(acc / static_cast<double>(by * bx));
    }
  return out;
}

std::vector<TeacherRecord> synthesize_records(const SegmentationSample& sample, const SynthTeacherSpec& spec,
                                              std::uint64_t seed) {
  if (spec.models.empty()) throw std::invalid_argument("synthetic teacher spec lists no models");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw std::invalid_argument("synthetic teacher noise sigma must be finite and >= 0");
  }
  if (sample.mask.channels() != 1 || sample.mask.empty()) {
    throw DimensionError("channels", "sample mask must be a non-empty single-channel map");
  }
  std::vector<TeacherRecord> out;
  for (std::size_t mi = 0; mi < spec.models.size(); ++mi) {
    const auto& model = spec.models[mi];
    if (model.channels == 0) throw std::invalid_argument("pseudo-model '" + model.model_id + "' has zero channels");
    const FeatureMap base = downsample_mask(sample.mask, model.resolution);
    const FeatureMap grad = morphological_gradient(base);
    const FeatureMap sobel = sobel_magnitude(base, grad);
    TeacherRecord rec{model.model_id, FeatureMap(model.channels, model.resolution, model.resolution)};
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (mi + 1)));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t c = 0; c < model.channels; ++c) {
      // Blob channels 0, 2, 4, ... are progressively smoother; edge channels alternate
      // between the morphological gradient and the masked Sobel magnitude.
      const std::size_t rank = c / 2;
      FeatureMap src = SynthTeacherSpec::kind(c) == SynthChannelKind::Blob
                           ? gaussian_blur(base, 0.75 * static_cast<double>(rank))
                           : (rank % 2 == 0 ? grad : sobel);
      auto dst = rec.features.channel(c);
      for (std::size_t i = 0; i < dst.size(); ++i) {
        const double n = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise(rng) : 0.0;
        dst[i] = static_cast<float>(src.data()[i] + n);
      }
    }
    validate_record(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

TeacherBundle synthesize_teachers(const SegmentationSample& sample, const SynthTeacherSpec& spec, std::uint64_t seed,
                                  const FusionOptions& options) {
  return fuse(synthesize_records(sample, spec, seed), options);
}

}  // namespace difom
