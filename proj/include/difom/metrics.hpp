// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "difom/feature_map.hpp"

namespace difom {

inline constexpr std::size_t kThresholdCount = 256;
/// MATLAB's eps, used where the reference implementations add it.
inline constexpr double kRefEps = 2.220446049250313e-16;

/// Single-channel prediction in [0, 1] and strictly binary ground truth of equal size.
struct EvalPair {
  FeatureMap pred;
  FeatureMap gt;
};

/// Validates, clamps `pred` into [0, 1], binarises `gt` at 0.5 and resizes `pred`
/// (bilinear) to the ground-truth grid when they differ.
EvalPair make_eval_pair(FeatureMap pred, FeatureMap gt);

/// Pixel counts as foreground at threshold index k (t = k / 255) when p >= t and p > 0.
bool above_threshold(float p, std::size_t k);

struct DiceIou {
  double dice = 0.0;
  double iou = 0.0;
};

/// Means of Dice and IoU over the 256 thresholds; 0/0 counts as 1.
DiceIou dice_iou_curve(const EvalPair& pair);
/// Dice and IoU after binarising at p >= threshold.
DiceIou dice_iou_fixed(const EvalPair& pair, double threshold = 0.5);
double mae(const EvalPair& pair);
/// Structure measure, alpha * object + (1 - alpha) * region.
double s_measure(const EvalPair& pair, double alpha = 0.5);
/// Maximum enhanced-alignment measure over the 256 thresholds.
double e_measure_max(const EvalPair& pair);
/// Weighted F-measure; 0 for an empty ground truth. A background pixel inherits the
/// mean error of its equidistant nearest foreground pixels.
double weighted_f_beta(const EvalPair& pair, double beta2 = 1.0);

/// Exact Euclidean distance transform to the nearest nonzero pixel. For every pixel,
/// all equidistant nearest nonzero pixels are listed (row-major indices, ascending).
/// Requires at least one nonzero pixel.
struct DistanceField {
  std::vector<double> distance;
  std::vector<std::size_t> tie_offsets;  // pixel i owns tie_indices[tie_offsets[i], tie_offsets[i + 1])
  std::vector<std::size_t> tie_indices;

  std::span<const std::size_t> nearest(std::size_t i) const {
    return std::span<const std::size_t>(tie_indices).subspan(tie_offsets[i], tie_offsets[i + 1] - tie_offsets[i]);
  }
};
DistanceField distance_transform(const FeatureMap& binary);

struct MetricReport {
  double m_dice = 0.0;
  double m_iou = 0.0;
  double f_beta_w = 0.0;
  double s_alpha = 0.0;
  double e_phi_max = 0.0;
  double mae = 0.0;
  std::size_t n_images = 0;
};

struct EvalOptions {
  std::optional<double> fixed_threshold;  // unset: threshold sweep
  std::size_t threads = 1;                // evaluate_folder workers
};

MetricReport evaluate_pair(const EvalPair& pair, const EvalOptions& options = {});
/// Arithmetic mean of per-image reports.
MetricReport average(const std::vector<MetricReport>& reports);

struct FolderReport {
  std::vector<std::pair<std::string, MetricReport>> rows;
  MetricReport mean;
};

/// Matches files by name across the two directories; a file without a counterpart
/// raises MissingInputError naming every unmatched file.
FolderReport evaluate_folder(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                             const EvalOptions& options = {});
void write_report_csv(const std::filesystem::path& path, const FolderReport& report);

}  // namespace difom
