#pragma once

// Mask fit scores: the share of ROI pixels covered by the predicted mask,
// their 10-bin histogram, and segmentation/classification metrics.

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>

#include "maskscope/error.hpp"
#include "maskscope/geometry.hpp"

namespace maskscope {

/// Percentage of ROI covered, in [0, 100].
class FitScore {
 public:
  explicit FitScore(double value) : value_(value) {
    if (!std::isfinite(value) || value < 0.0 || value > 100.0)
      throw Error(Errc::out_of_range, "fit score must lie in [0, 100], got " + std::to_string(value));
  }
  double value() const { return value_; }
  friend bool operator==(const FitScore&, const FitScore&) = default;

 private:
  double value_;
};

/// 100 * |pred & roi| / |roi|. `pred` is the full predicted-positive pixel
/// set (true and false positives alike).
inline FitScore fit_score(const BitMask& pred, const BitMask& roi) {
  if (!pred.same_shape(roi))
    throw Error(Errc::shape_mismatch, "prediction " + std::to_string(pred.width()) + "x" +
                                          std::to_string(pred.height()) + " vs ROI " +
                                          std::to_string(roi.width()) + "x" +
                                          std::to_string(roi.height()));
  const std::size_t roi_px = roi.count();
  if (roi_px == 0) throw Error(Errc::empty_roi, "ROI has no pixels");
  const std::size_t covered = intersection_count(pred, roi);
  return FitScore(100.0 * static_cast<double>(covered) / static_cast<double>(roi_px));
}

inline constexpr std::size_t kFitBins = 10;

/// Bin 1 covers [0, 10]; bin b > 1 covers (10(b-1), 10b].
struct FitHistogram {
  std::array<std::uint64_t, kFitBins> bins{};
  std::uint64_t total = 0;

  /// 1-based bin index for a score.
  static std::size_t bin_of(double score) {
    if (score <= 10.0) return 1;
    const double b = std::ceil(score / 10.0);
    return b >= 10.0 ? 10 : static_cast<std::size_t>(b);
  }

  void add(FitScore s, std::uint64_t n = 1) {
    bins[bin_of(s.value()) - 1] += n;
    total += n;
  }

  FitHistogram& operator+=(const FitHistogram& o) {
    for (std::size_t i = 0; i < kFitBins; ++i) bins[i] += o.bins[i];
    total += o.total;
    return *this;
  }

  friend bool operator==(const FitHistogram&, const FitHistogram&) = default;
};

inline FitHistogram bin_scores(std::span<const FitScore> scores) {
  FitHistogram h;
  for (const auto& s : scores) h.add(s);
  return h;
}

/// Percentage of scores in bins strictly above `threshold_bin` (0..10).
inline double share_above(const FitHistogram& h, std::size_t threshold_bin) {
  if (h.total == 0) throw Error(Errc::empty_input, "fit histogram is empty");
  if (threshold_bin > kFitBins)
    throw Error(Errc::out_of_range, "threshold bin must be in 0..10");
  std::uint64_t above = 0;
  for (std::size_t b = threshold_bin; b < kFitBins; ++b) above += h.bins[b];
  return 100.0 * static_cast<double>(above) / static_cast<double>(h.total);
}

struct SegMetrics {
  double iou = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
};

/// Empty-set conventions: IoU of two empty masks is 1, recall with an
/// empty ground truth is 1.
inline SegMetrics segmentation_metrics(const BitMask& pred, const BitMask& gt) {
  if (!pred.same_shape(gt)) throw Error(Errc::shape_mismatch, "prediction and ground truth differ in shape");
  const auto p = pred.data();
  const auto g = gt.data();
  std::size_t inter = 0, uni = 0, agree = 0, gt_n = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += p[i] & g[i];
    uni += p[i] | g[i];
    agree += p[i] == g[i];
    gt_n += g[i];
  }
  SegMetrics m;
  m.iou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  m.recall = gt_n == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(gt_n);
  m.accuracy = static_cast<double>(agree) / static_cast<double>(p.size());
  return m;
}

struct ClsMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline ClsMetrics classification_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn,
                                         std::uint64_t fn) {
  const std::uint64_t n = tp + fp + tn + fn;
  if (n == 0) throw Error(Errc::empty_input, "confusion matrix is all zero");
  auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  ClsMetrics m{ratio(tp, tp + fp), ratio(tp, tp + fn), ratio(tp + tn, n), tp, fp, tn, fn};
  return m;
}

}  // namespace maskscope
