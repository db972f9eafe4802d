// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "difom/teacher_io.hpp"

using namespace difom;
namespace fs = std::filesystem;

namespace {

TeacherRecord random_record(const std::string& id, std::size_t c, std::size_t h, std::size_t w, std::mt19937_64& rng,
                            float scale = 1.0f, float shift = 0.0f) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  TeacherRecord r{id, FeatureMap(c, h, w)};
  for (float& v : r.features.data()) v = shift + scale * n(rng);
  return r;
}

SegmentationSample square_sample(std::size_t size, std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1) {
  SegmentationSample s{"sq", FeatureMap(3, size, size, 0.5f), FeatureMap(1, size, size)};
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) s.mask.at(0, y, x) = 1.0f;
  return s;
}

}  // namespace

TEST(Fusion, ConstantRecordResizesToConstant) {
  const fs::path path = fs::temp_directory_path() / "difom_const.dfom";
  write_bundle(std::vector<TeacherRecord>{{"const", FeatureMap(2, 4, 4, 1.0f)}}, path);
  TeacherBundle b = load_bundle(path, {.resolution = 8, .zscore = false});
  EXPECT_EQ(b.d_star, 2u);
  EXPECT_EQ(b.fused.channels(), 2u);
  EXPECT_EQ(b.fused.height(), 8u);
  EXPECT_EQ(b.fused.width(), 8u);
  for (float v : b.fused.data()) EXPECT_FLOAT_EQ(v, 1.0f);
}

TEST(Fusion, ConstantRecordIsCentredUnderZscore) {
  TeacherBundle b = fuse({{"const", FeatureMap(2, 4, 4, 3.0f)}}, {.resolution = 8});
  for (float v : b.fused.data()) EXPECT_NEAR(v, 0.0f, 1e-6);
}

TEST(Fusion, ChannelsConcatenateInRecordOrder) {
  std::mt19937_64 rng(1);
  auto a = random_record("a", 3, 6, 6, rng), c = random_record("c", 5, 6, 6, rng);
  TeacherBundle b = fuse({a, c}, {.resolution = 6, .zscore = false});
  EXPECT_EQ(b.d_star, 8u);
  ASSERT_EQ(b.records.size(), 2u);
  EXPECT_EQ(b.records[0].model_id, "a");
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < 36; ++i) EXPECT_EQ(b.fused.channel(ch)[i], a.features.channel(ch)[i]);
  for (std::size_t ch = 0; ch < 5; ++ch)
    for (std::size_t i = 0; i < 36; ++i) EXPECT_EQ(b.fused.channel(3 + ch)[i], c.features.channel(ch)[i]);
}

TEST(Fusion, FourTeachersAtDefaultResolution) {
  // Native grids of four differently-shaped teachers, fused at the default 32 x 32.
  std::mt19937_64 rng(2);
  std::vector<TeacherRecord> recs = {random_record("sam", 16, 64, 64, rng), random_record("dinov2", 12, 37, 37, rng),
                                     random_record("oneformer", 8, 24, 24, rng),
                                     random_record("mask2former", 4, 32, 32, rng)};
  FusionOptions opts;
  EXPECT_EQ(opts.resolution, 32u);
  TeacherBundle b = fuse(recs, opts);
  EXPECT_EQ(b.d_star, 40u);
  EXPECT_EQ(b.fused.height(), 32u);
  EXPECT_EQ(b.fused.width(), 32u);
  EXPECT_EQ(b.fused.channels(), 40u);
}

TEST(Fusion, DStarIsSumOfRecordChannels) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> dim(1, 9), count(1, 5);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<TeacherRecord> recs;
    std::size_t expected = 0;
    for (std::size_t i = count(rng); i > 0; --i) {
      recs.push_back(random_record("t" + std::to_string(i), dim(rng), dim(rng), dim(rng), rng));
      expected += recs.back().features.channels();
    }
    TeacherBundle b = fuse(recs, {.resolution = 1 + dim(rng)});
    EXPECT_EQ(b.d_star, expected);
    EXPECT_EQ(b.fused.channels(), expected);
  }
}

TEST(Fusion, RecordAtTargetResolutionIsBitIdentical) {
  std::mt19937_64 rng(4);
  auto r = random_record("x", 4, 16, 16, rng);
  FeatureMap resized = resize_bilinear(r.features, 16, 16);
  EXPECT_EQ(std::memcmp(resized.data().data(), r.features.data().data(), r.features.data().size_bytes()), 0);
  TeacherBundle b = fuse({r}, {.resolution = 16, .zscore = false});
  EXPECT_EQ(std::memcmp(b.fused.data().data(), r.features.data().data(), r.features.data().size_bytes()), 0);
}

TEST(Fusion, ZscoreStandardisesEachRecordSeparately) {
  std::mt19937_64 rng(5);
  auto big = random_record("big", 3, 8, 8, rng, 250.0f, 40.0f);
  auto tiny = random_record("tiny", 2, 8, 8, rng, 0.01f, -3.0f);
  TeacherBundle b = fuse({big, tiny}, {.resolution = 8});
  auto stats = [&](std::size_t c0, std::size_t c1) {
    double m = 0, s = 0, n = 0;
    for (std::size_t c = c0; c < c1; ++c)
      for (float v : b.fused.channel(c)) m += v, s += double(v) * v, ++n;
    m /= n;
    return std::pair{m, s / n - m * m};
  };
  for (auto [c0, c1] : {std::pair<std::size_t, std::size_t>{0, 3}, {3, 5}}) {
    auto [mean, var] = stats(c0, c1);
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(Fusion, RejectsEmptyAndZeroResolution) {
  EXPECT_THROW(fuse({}, {}), FormatError);
  EXPECT_THROW(fuse({{"a", FeatureMap(1, 2, 2)}}, {.resolution = 0}), DimensionError);
}

TEST(SynthTeachers, NoiselessBlobChannelIsDownsampledMask) {
  SegmentationSample s = square_sample(64, 10, 37, 20, 51);
  SynthTeacherSpec spec = default_synth_spec(0.0);
  auto recs = synthesize_records(s, spec, 7);
  ASSERT_EQ(recs.size(), spec.models.size());
  for (std::size_t m = 0; m < recs.size(); ++m) {
    const std::size_t r = spec.models[m].resolution, block = 64 / r;
    ASSERT_EQ(recs[m].features.height(), r);
    // Independent box average of each block.
    for (std::size_t y = 0; y < r; ++y)
      for (std::size_t x = 0; x < r; ++x) {
        int on = 0;
        for (std::size_t i = y * block; i < (y + 1) * block; ++i)
          for (std::size_t j = x * block; j < (x + 1) * block; ++j) on += (i >= 10 && i < 37 && j >= 20 && j < 51);
        EXPECT_FLOAT_EQ(recs[m].features.at(0, y, x), static_cast<float>(on) / (block * block));
      }
  }
}

TEST(SynthTeachers, NoiselessEdgeChannelsHugTheBoundary) {
  // Block-aligned square at the 8x8 grid, so the downsampled masks are binary.
  SegmentationSample s = square_sample(64, 16, 48, 8, 40);
  SynthTeacherSpec spec;
  spec.models = {{"e16", 6, 16}, {"e8", 6, 8}};
  spec.noise_sigma = 0.0;
  for (const TeacherRecord& rec : synthesize_records(s, spec, 1)) {
    const std::size_t r = rec.features.height(), block = 64 / r;
    auto inside = [&](long y, long x) {
      return y >= 0 && x >= 0 && y < long(r) && x < long(r) && y * block >= 16 && y * block < 48 &&
             x * block >= 8 && x * block < 40;
    };
    auto on_boundary = [&](long y, long x) {
      const bool v = inside(y, x);
      return (y > 0 && inside(y - 1, x) != v) || (y + 1 < long(r) && inside(y + 1, x) != v) ||
             (x > 0 && inside(y, x - 1) != v) || (x + 1 < long(r) && inside(y, x + 1) != v);
    };
    for (std::size_t c = 0; c < rec.features.channels(); ++c) {
      if (SynthTeacherSpec::kind(c) != SynthChannelKind::Edge) continue;
      std::size_t nonzero = 0;
      for (long y = 0; y < long(r); ++y)
        for (long x = 0; x < long(r); ++x) {
          if (rec.features.at(c, y, x) == 0.0f) continue;
          ++nonzero;
          bool near = false;
          for (long dy = -1; dy <= 1; ++dy)
            for (long dx = -1; dx <= 1; ++dx) near |= on_boundary(y + dy, x + dx);
          EXPECT_TRUE(near) << rec.model_id << " channel " << c << " at " << y << "," << x;
        }
      EXPECT_GT(nonzero, 0u) << rec.model_id << " channel " << c;
    }
  }
}

TEST(SynthTeachers, SameSeedIsBitIdentical) {
  SegmentationSample s = square_sample(32, 5, 20, 3, 17);
  SynthTeacherSpec spec = default_synth_spec(0.1);
  auto a = synthesize_teachers(s, spec, 42, {.resolution = 16});
  auto b = synthesize_teachers(s, spec, 42, {.resolution = 16});
  EXPECT_TRUE(a.fused == b.fused);
  auto c = synthesize_teachers(s, spec, 43, {.resolution = 16});
  EXPECT_FALSE(a.fused == c.fused);
}

TEST(SynthTeachers, NoiseLevelMatchesSigma) {
  SegmentationSample s = square_sample(64, 0, 0, 0, 0);  // empty mask: channels are pure noise
  SynthTeacherSpec spec;
  spec.models = {{"n", 4, 32}};
  spec.noise_sigma = 0.3;
  auto recs = synthesize_records(s, spec, 9);
  double ss = 0.0;
  for (float v : recs[0].features.data()) ss += double(v) * v;
  EXPECT_NEAR(std::sqrt(ss / recs[0].features.size()), 0.3, 0.02);
}

TEST(SynthTeachers, RejectsBadSpec) {
  SegmentationSample s = square_sample(16, 2, 8, 2, 8);
  SynthTeacherSpec spec = default_synth_spec(-0.1);
  EXPECT_THROW(synthesize_records(s, spec, 0), std::invalid_argument);
  spec.noise_sigma = 0.0;
  spec.models.clear();
  EXPECT_THROW(synthesize_records(s, spec, 0), std::invalid_argument);
}
