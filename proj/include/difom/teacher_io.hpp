// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "difom/binary_io.hpp"
#include "difom/feature_map.hpp"
#include "difom/sample.hpp"

namespace difom {

// "DFOM" teacher embedding file, little-endian:
//   magic "DFOM" | version u32 = 1 | record count u32
//   per record: model_id (u32 length + UTF-8) | H_t, W_t, D_t (3 x u32) | f32 payload in (C, H, W) order
inline constexpr std::uint32_t kBundleVersion = 1;
inline constexpr std::size_t kMaxModelIdBytes = 64;
inline constexpr std::size_t kPaperTeacherResolution = 32;

/// Features of one foundation model at its native resolution.
struct TeacherRecord {
  std::string model_id;
  FeatureMap features;
};

struct TeacherBundle {
  std::vector<TeacherRecord> records;  // file order
  FeatureMap fused;                    // D* x H' x W'
  std::size_t d_star = 0;
};

struct FusionOptions {
  std::size_t resolution = kPaperTeacherResolution;  // H' = W'
  bool zscore = true;                                 // per-record standardisation before concatenation
};

/// Throws FormatError when a record breaks the id/shape/finiteness invariants.
void validate_record(const TeacherRecord& record);

std::vector<std::uint8_t> encode_records(std::span<const TeacherRecord> records);
std::vector<TeacherRecord> decode_records(std::span<const std::uint8_t> bytes);

/// Atomic write; rejects an empty record list.
void write_bundle(std::span<const TeacherRecord> records, const std::filesystem::path& path);
std::vector<TeacherRecord> read_records(const std::filesystem::path& path);

/// Resizes each record to H' x W' (bilinear), optionally standardises it, and
/// concatenates channels in record order.
TeacherBundle fuse(std::vector<TeacherRecord> records, const FusionOptions& options);
TeacherBundle load_bundle(const std::filesystem::path& path, const FusionOptions& options);

enum class SynthChannelKind { Blob, Edge };

/// Pseudo foundation models whose channels are derived from the ground-truth mask.
struct SynthTeacherSpec {
  struct Model {
    std::string model_id;
    std::size_t channels = 4;
    std::size_t resolution = 16;  // native grid of this pseudo-model
  };
  std::vector<Model> models;
  double noise_sigma = 0.1;

  /// Channel c of every model: even -> blob (low-pass), odd -> edge (boundary).
  static SynthChannelKind kind(std::size_t channel) {
    return channel % 2 == 0 ? SynthChannelKind::Blob : SynthChannelKind::Edge;
  }
  std::size_t total_channels() const;
};

/// Two pseudo-models with 4 channels each at native grids 16 and 8 (D* = 8).
SynthTeacherSpec default_synth_spec(double noise_sigma = 0.1);

/// Native-resolution pseudo-teacher records for one sample. Deterministic in (sample, spec, seed).
std::vector<TeacherRecord> synthesize_records(const SegmentationSample& sample, const SynthTeacherSpec& spec,
                                              std::uint64_t seed);
TeacherBundle synthesize_teachers(const SegmentationSample& sample, const SynthTeacherSpec& spec,
                                  std::uint64_t seed, const FusionOptions& options);

/// Area-average downsampling of a 1-channel mask to `resolution` x `resolution`
/// when the mask side is a multiple of it; bilinear otherwise.
FeatureMap downsample_mask(const FeatureMap& mask, std::size_t resolution);

}  // namespace difom
