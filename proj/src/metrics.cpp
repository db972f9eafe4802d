// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/metrics.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "difom/binary_io.hpp"
#include "difom/errors.hpp"
#include "difom/image_io.hpp"

namespace difom {

namespace {

void check_pair(const EvalPair& p) {
  if (p.gt.empty() || p.pred.empty()) throw DimensionError("numel", "metric on an empty map");
  if (p.pred.channels() != 1 || p.gt.channels() != 1) throw DimensionError("channels", "metrics need 1-channel maps");
  if (p.pred.height() != p.gt.height() || p.pred.width() != p.gt.width()) {
    throw DimensionError("height", "prediction and ground truth differ in size");
  }
}

// Number of thresholds k in [0, 255] for which above_threshold(p, k) holds.
std::size_t passes(float p) {
  if (!(p > 0.0f)) return 0;
  const double v = p;
  auto k = static_cast<long>(std::floor(v * 255.0));
  k = std::clamp(k, 0L, 255L);
  while (k < 255 && static_cast<double>(k + 1) / 255.0 <= v) ++k;
  while (k >= 0 && static_cast<double>(k) / 255.0 > v) --k;
  return static_cast<std::size_t>(k + 1);
}

struct Confusion {
  double tp = 0, fp = 0, fn = 0, tn = 0;
};

// Confusion matrix at every threshold index via a histogram of pass counts.
std::array<Confusion, kThresholdCount> confusion_curve(const EvalPair& pair) {
  std::array<double, kThresholdCount + 1> fg_hist{}, bg_hist{};
  double n_fg = 0, n_bg = 0;
  const auto pd = pair.pred.data();
  const auto gd = pair.gt.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const std::size_t c = passes(pd[i]);
    if (gd[i] > 0.5f) {
      fg_hist[c] += 1;
      n_fg += 1;
    } else {
      bg_hist[c] += 1;
      n_bg += 1;
    }
  }
  // Pixel with pass count c is foreground for thresholds k < c.
  std::array<Confusion, kThresholdCount> out{};
  double tp = 0, fp = 0;
  for (std::size_t k = kThresholdCount; k-- > 0;) {
    tp += fg_hist[k + 1];
    fp += bg_hist[k + 1];
    out[k] = {tp, fp, n_fg - tp, n_bg - fp};
  }
  return out;
}

double dice_of(const Confusion& c) {
  const double d = 2 * c.tp + c.fp + c.fn;
  return d == 0 ? 1.0 : 2 * c.tp / d;
}

double iou_of(const Confusion& c) {
  const double d = c.tp + c.fp + c.fn;
  return d == 0 ? 1.0 : c.tp / d;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

// Object similarity of the values inside a region.
double object_score(const std::vector<double>& values) {
  const double x = mean_of(values);
  double sigma = 0.0;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - x) * (v - x);
    sigma = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return 2.0 * x / (x * x + 1.0 + sigma + kRefEps);
}

double s_object(const EvalPair& p) {
  std::vector<double> fg, bg;
  const auto pd = p.pred.data();
  const auto gd = p.gt.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    if (gd[i] > 0.5f) {
      fg.push_back(pd[i]);
    } else {
      bg.push_back(1.0 - pd[i]);
    }
  }
  const double u = static_cast<double>(fg.size()) / static_cast<double>(pd.size());
  return u * object_score(fg) + (1.0 - u) * object_score(bg);
}

// SSIM-like block score over rows [y0, y1) and columns [x0, x1).
double block_ssim(const EvalPair& p, std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1) {
  const double n = static_cast<double>((y1 - y0) * (x1 - x0));
  if (n == 0) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) {
      mx += p.pred.at(0, y, x);
      my += p.gt.at(0, y, x);
    }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) {
      const double dx = p.pred.at(0, y, x) - mx, dy = p.gt.at(0, y, x) - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
  const double denom = n - 1 + kRefEps;
  sxx /= denom;
  syy /= denom;
  sxy /= denom;
  const double alpha = 4 * mx * my * sxy;
  const double beta = (mx * mx + my * my) * (sxx + syy);
  if (alpha != 0) return alpha / (beta + kRefEps);
  return beta == 0 ? 1.0 : 0.0;
}

double s_region(const EvalPair& p) {
  const std::size_t h = p.gt.height(), w = p.gt.width();
  double total = 0, sx = 0, sy = 0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double g = p.gt.at(0, y, x);
      total += g;
      sx += g * static_cast<double>(x + 1);
      sy += g * static_cast<double>(y + 1);
    }
  // 1-based centroid, rounded half away from zero like MATLAB's round.
  const auto cx = static_cast<std::size_t>(std::round(total == 0 ? w / 2.0 : sx / total));
  const auto cy = static_cast<std::size_t>(std::round(total == 0 ? h / 2.0 : sy / total));
  const double area = static_cast<double>(h * w);
  const double w1 = static_cast<double>(cx * cy) / area;
  const double w2 = static_cast<double>((w - cx) * cy) / area;
  const double w3 = static_cast<double>(cx * (h - cy)) / area;
  const double w4 = 1.0 - w1 - w2 - w3;
  return w1 * block_ssim(p, 0, cy, 0, cx) + w2 * block_ssim(p, 0, cy, cx, w) + w3 * block_ssim(p, cy, h, 0, cx) +
         w4 * block_ssim(p, cy, h, cx, w);
}

}  // namespace

EvalPair make_eval_pair(FeatureMap pred, FeatureMap gt) {
  if (pred.empty() || gt.empty()) throw DimensionError("numel", "metric on an empty map");
  if (pred.channels() != 1 || gt.channels() != 1) throw DimensionError("channels", "metrics need 1-channel maps");
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    pred = resize_bilinear(pred, gt.height(), gt.width());
  }
  for (float& v : pred.data()) {
    if (std::isnan(v)) throw std::invalid_argument("prediction contains NaN");
    v = std::clamp(v, 0.0f, 1.0f);
  }
  for (float& v : gt.data()) v = v >= 0.5f ? 1.0f : 0.0f;
  return {std::move(pred), std::move(gt)};
}

bool above_threshold(float p, std::size_t k) {
  return p > 0.0f && static_cast<double>(p) >= static_cast<double>(k) / 255.0;
}

DiceIou dice_iou_curve(const EvalPair& pair) {
  check_pair(pair);
  const auto curve = confusion_curve(pair);
  DiceIou r;
  for (const Confusion& c : curve) {
    r.dice += dice_of(c);
    r.iou += iou_of(c);
  }
  r.dice /= kThresholdCount;
  r.iou /= kThresholdCount;
  return r;
}

DiceIou dice_iou_fixed(const EvalPair& pair, double threshold) {
  check_pair(pair);
  Confusion c;
  const auto pd = pair.pred.data();
  const auto gd = pair.gt.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const bool p = static_cast<double>(pd[i]) >= threshold, g = gd[i] > 0.5f;
    c.tp += p && g;
    c.fp += p && !g;
    c.fn += !p && g;
  }
  return {dice_of(c), iou_of(c)};
}

double mae(const EvalPair& pair) {
  check_pair(pair);
  double s = 0;
  const auto pd = pair.pred.data();
  const auto gd = pair.gt.data();
  for (std::size_t i = 0; i < pd.size(); ++i) s += std::abs(static_cast<double>(pd[i]) - gd[i]);
  return s / static_cast<double>(pd.size());
}

double s_measure(const EvalPair& pair, double alpha) {
  check_pair(pair);
  double gt_mean = 0, pred_mean = 0;
  for (float g : pair.gt.data()) gt_mean += g;
  for (float p : pair.pred.data()) pred_mean += p;
  gt_mean /= static_cast<double>(pair.gt.size());
  pred_mean /= static_cast<double>(pair.pred.size());
  // Degenerate ground truth, as in the reference implementation.
  if (gt_mean == 0.0) return 1.0 - pred_mean;
  if (gt_mean == 1.0) return pred_mean;
  return std::max(0.0, alpha * s_object(pair) + (1.0 - alpha) * s_region(pair));
}

double e_measure_max(const EvalPair& pair) {
  check_pair(pair);
  const std::size_t n = pair.gt.size();
  const auto pd = pair.pred.data();
  const auto gd = pair.gt.data();
  double n_fg = 0;
  for (float g : gd) n_fg += g;
  const double mu_gt = n_fg / static_cast<double>(n);
  std::vector<std::size_t> pass(n);
  for (std::size_t i = 0; i < n; ++i) pass[i] = passes(pd[i]);

  double best = 0.0;
  for (std::size_t k = 0; k < kThresholdCount; ++k) {
    double n_on = 0;
    for (std::size_t i = 0; i < n; ++i) n_on += pass[i] > k;
    double score = 0;
    if (n_fg == 0) {
      score = static_cast<double>(n) - n_on;  // sum of (1 - FM)
    } else if (n_fg == static_cast<double>(n)) {
      score = n_on;
    } else {
      const double mu_fm = n_on / static_cast<double>(n);
      // Only four (fm, gt) combinations occur; weight each by its count.
      double counts[2][2] = {{0, 0}, {0, 0}};
      for (std::size_t i = 0; i < n; ++i) counts[pass[i] > k][gd[i] > 0.5f] += 1;
      for (int f = 0; f < 2; ++f)
        for (int g = 0; g < 2; ++g) {
          if (counts[f][g] == 0) continue;
          const double af = f - mu_fm, ag = g - mu_gt;
          const double align = 2.0 * ag * af / (ag * ag + af * af + kRefEps);
          score += counts[f][g] * (align + 1.0) * (align + 1.0) / 4.0;
        }
    }
    best = std::max(best, score / static_cast<double>(n));
  }
  return best;
}

DistanceField distance_transform(const FeatureMap& binary) {
  const std::size_t h = binary.height(), w = binary.width();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  // Column pass: nearest nonzero row at or above, and at or below, in each column.
  std::vector<std::size_t> up(h * w, kNone), down(h * w, kNone);
  bool any = false;
  for (std::size_t x = 0; x < w; ++x) {
    std::size_t last = kNone;
    for (std::size_t y = 0; y < h; ++y) {
      if (binary.at(0, y, x) > 0.5f) last = y, any = true;
      up[y * w + x] = last;
    }
    last = kNone;
    for (std::size_t y = h; y-- > 0;) {
      if (binary.at(0, y, x) > 0.5f) last = y;
      down[y * w + x] = last;
    }
  }
  if (!any) throw std::invalid_argument("distance_transform needs at least one nonzero pixel");
  DistanceField f;
  f.distance.resize(h * w);
  f.tie_offsets.reserve(h * w + 1);
  f.tie_offsets.push_back(0);
  // Row scan over the per-column candidates; every globally nearest pixel is one of them.
  std::vector<std::size_t> ties;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t best = kNone;
      ties.clear();
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t dx = c > x ? c - x : x - c;
        for (std::size_t r : {up[y * w + c], down[y * w + c]}) {
          if (r == kNone) continue;
          const std::size_t dy = r > y ? r - y : y - r;
          const std::size_t d = dy * dy + dx * dx;
          if (d < best) {
            best = d;
            ties.clear();
          }
          if (d == best) ties.push_back(r * w + c);
        }
      }
      std::sort(ties.begin(), ties.end());
      ties.erase(std::unique(ties.begin(), ties.end()), ties.end());
      f.distance[y * w + x] = std::sqrt(static_cast<double>(best));
      f.tie_indices.insert(f.tie_indices.end(), ties.begin(), ties.end());
      f.tie_offsets.push_back(f.tie_indices.size());
    }
  return f;
}

double weighted_f_beta(const EvalPair& pair, double beta2) {
  check_pair(pair);
  const std::size_t h = pair.gt.height(), w = pair.gt.width(), n = h * w;
  const auto pd = pair.pred.data();
  const auto gd = pair.gt.data();
  auto fg = [&](std::size_t i) { return gd[i] > 0.5f; };
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) any |= fg(i);
  if (!any) return 0.0;  // empty ground truth

  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = std::abs(static_cast<double>(pd[i]) - gd[i]);
  const DistanceField dt = distance_transform(pair.gt);
  // Background pixels take the error of their nearest foreground pixel(s).
  std::vector<double> et(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (fg(i)) {
      et[i] = e[i];
      continue;
    }
    double acc = 0;
    for (std::size_t j : dt.nearest(i)) acc += e[j];
    et[i] = acc / static_cast<double>(dt.nearest(i).size());
  }

  // 7x7 Gaussian, sigma 5, normalised; zero-padded correlation.
  double kernel[7][7], ksum = 0;
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b) ksum += kernel[a + 3][b + 3] = std::exp(-(a * a + b * b) / (2.0 * 25.0));
  for (auto& row : kernel)
    for (double& v : row) v /= ksum;
  std::vector<double> ea(n, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0;
      for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b) {
          const long yy = static_cast<long>(y) + a, xx = static_cast<long>(x) + b;
          if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
          acc += kernel[a + 3][b + 3] * et[yy * w + xx];
        }
      ea[y * w + x] = acc;
    }

  double fg_count = 0, ew_fg = 0, ew_bg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double min_e = (fg(i) && ea[i] < e[i]) ? ea[i] : e[i];
    const double importance = fg(i) ? 1.0 : 2.0 - std::exp(std::log(0.5) / 5.0 * dt.distance[i]);
    const double ew = min_e * importance;
    if (fg(i)) {
      ew_fg += ew;
      fg_count += 1;
    } else {
      ew_bg += ew;
    }
  }
  const double tpw = fg_count - ew_fg;
  const double recall = 1.0 - ew_fg / fg_count;
  const double precision = tpw / (kRefEps + tpw + ew_bg);
  return (1.0 + beta2) * recall * precision / (kRefEps + recall + beta2 * precision);
}

MetricReport evaluate_pair(const EvalPair& pair, const EvalOptions& options) {
  MetricReport r;
  const DiceIou di = options.fixed_threshold ? dice_iou_fixed(pair, *options.fixed_threshold) : dice_iou_curve(pair);
  r.m_dice = di.dice;
  r.m_iou = di.iou;
  r.f_beta_w = weighted_f_beta(pair);
  r.s_alpha = s_measure(pair);
  r.e_phi_max = e_measure_max(pair);
  r.mae = mae(pair);
  r.n_images = 1;
  return r;
}

MetricReport average(const std::vector<MetricReport>& reports) {
  MetricReport m;
  if (reports.empty()) return m;
  for (const MetricReport& r : reports) {
    m.m_dice += r.m_dice;
    m.m_iou += r.m_iou;
    m.f_beta_w += r.f_beta_w;
    m.s_alpha += r.s_alpha;
    m.e_phi_max += r.e_phi_max;
    m.mae += r.mae;
  }
  const double k = static_cast<double>(reports.size());
  m.m_dice /= k;
  m.m_iou /= k;
  m.f_beta_w /= k;
  m.s_alpha /= k;
  m.e_phi_max /= k;
  m.mae /= k;
  m.n_images = reports.size();
  return m;
}

FolderReport evaluate_folder(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                             const EvalOptions& options) {
  namespace fs = std::filesystem;
  for (const fs::path& d : {pred_dir, gt_dir}) {
    if (!fs::is_directory(d)) throw MissingInputError("directory not found: " + d.string());
  }
  auto list = [](const fs::path& dir) {
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && is_mask_file(entry.path())) names.insert(entry.path().filename().string());
    }
    return names;
  };
  const auto preds = list(pred_dir), gts = list(gt_dir);
  std::vector<std::string> only_pred, only_gt;
  std::set_difference(preds.begin(), preds.end(), gts.begin(), gts.end(), std::back_inserter(only_pred));
  std::set_difference(gts.begin(), gts.end(), preds.begin(), preds.end(), std::back_inserter(only_gt));
  if (!only_pred.empty() || !only_gt.empty()) {
    std::ostringstream os;
    os << "prediction and ground-truth folders differ;";
    if (!only_gt.empty()) {
      os << " missing predictions:";
      for (const auto& s : only_gt) os << ' ' << s;
      os << ';';
    }
    if (!only_pred.empty()) {
      os << " missing ground truth:";
      for (const auto& s : only_pred) os << ' ' << s;
    }
    throw MissingInputError(os.str());
  }
  if (gts.empty()) throw MissingInputError("no mask images found in " + gt_dir.string());
  if (options.threads == 0) throw std::invalid_argument("evaluate_folder: threads must be >= 1");
  const std::vector<std::string> names(gts.begin(), gts.end());
  std::vector<MetricReport> all(names.size());
  std::vector<std::exception_ptr> errors(names.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < names.size(); i = next++) {
      try {
        const EvalPair pair = make_eval_pair(read_gray(pred_dir / names[i]), read_gray(gt_dir / names[i]));
        all[i] = evaluate_pair(pair, options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t extra = std::min(options.threads, names.size()) - 1;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < extra; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  FolderReport report;
  for (std::size_t i = 0; i < names.size(); ++i) report.rows.emplace_back(names[i], all[i]);
  report.mean = average(all);
  return report;
}

void write_report_csv(const std::filesystem::path& path, const FolderReport& report) {
  std::ostringstream os;
  os.precision(9);
  os << "image,m_dice,m_iou,f_beta_w,s_alpha,e_phi_max,mae\n";
  auto row = [&](const std::string& name, const MetricReport& r) {
    os << name << ',' << r.m_dice << ',' << r.m_iou << ',' << r.f_beta_w << ',' << r.s_alpha << ',' << r.e_phi_max
       << ',' << r.mae << '\n';
  };
  for (const auto& [name, r] : report.rows) row(name, r);
  row("mean", report.mean);
  const std::string text = os.str();
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace difom
