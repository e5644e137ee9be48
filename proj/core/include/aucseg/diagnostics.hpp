#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "aucseg/types.hpp"

namespace aucseg {

/// Head / middle / tail grouping of the classes that have pixels.
struct Partition {
  std::vector<int> head;
  std::vector<int> middle;
  std::vector<int> tail;
};

/// Classes sorted by descending pixel count (ties: smaller index first);
/// the first head_count are head, the next middle_count middle, the rest
/// tail. Classes without pixels are left out.
Partition make_partition(const ClassStats& stats, int head_count, int middle_count);

struct MetricReport {
  static constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

  /// Empty for classes absent from both prediction and truth.
  std::vector<std::optional<double>> per_class_iou;
  double overall_miou = kUndefined;
  double head_miou = kUndefined;
  double middle_miou = kUndefined;
  double tail_miou = kUndefined;
  double ovo_auc = kUndefined;
};

/// Per-pixel argmax; ties go to the smaller class index.
LabelGrid argmax_labels(const ScoreGrid& scores);

/// Pooled confusion over all images: IoU_c = TP / (TP + FP + FN). Pixels
/// ignored in the truth are skipped. Group means average the defined IoUs
/// of the group's classes and stay NaN when none are defined.
MetricReport iou_report(std::span<const LabelGrid> predicted, std::span<const LabelGrid> truth,
                        const Partition& partition, int num_classes);

/// Mean over ordered class pairs (c, c'), both present, of the empirical
/// probability that channel c scores a class-c pixel above a class-c' pixel,
/// ties counting one half. Uses midrank sums per pair.
double ovo_auc_metric(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels);

/// (max_c  n_max(c) / n_sum(c))^2 where n_max(c) is the largest per-image
/// pixel count of class c and n_sum(c) the total over images. Classes with
/// no pixels are skipped.
double compute_tau(const ClassStats& stats);

/// Same ratio with n_sum(c) replaced by the per-image mean n_sum(c) / N.
double tau_mean_normalized(const ClassStats& stats);

/// Mean of count(a) / count(b) over head classes a and non-head classes b.
double compute_rm(const ClassStats& stats, std::span<const int> head);

}  // namespace aucseg
