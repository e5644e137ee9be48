#include "aucseg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

namespace aucseg {

namespace {

double mean_defined(const std::vector<std::optional<double>>& iou, std::span<const int> classes) {
  double sum = 0.0;
  int n = 0;
  for (int c : classes) {
    if (c >= 0 && std::size_t(c) < iou.size() && iou[c]) {
      sum += *iou[c];
      ++n;
    }
  }
  return n == 0 ? MetricReport::kUndefined : sum / n;
}

// Twice the Mann-Whitney U of `pos` over `neg`, exact in integers.
std::int64_t twice_u_statistic(std::span<const double> pos, std::span<const double> neg) {
  struct Tagged {
    double score;
    bool positive;
  };
  std::vector<Tagged> all;
  all.reserve(pos.size() + neg.size());
  for (double v : pos) all.push_back({v, true});
  for (double v : neg) all.push_back({v, false});
  std::sort(all.begin(), all.end(),
            [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

  // Twice the midrank of a tie block spanning 1-based ranks [i+1, j] is i+1+j.
  std::int64_t twice_rank_sum = 0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i + 1;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    std::int64_t positives = 0;
    for (std::size_t k = i; k < j; ++k) positives += all[k].positive;
    twice_rank_sum += positives * std::int64_t(i + 1 + j);
    i = j;
  }
  const auto np = std::int64_t(pos.size());
  return twice_rank_sum - np * (np + 1);
}

}  // namespace

Partition make_partition(const ClassStats& stats, int head_count, int middle_count) {
  std::vector<int> order;
  for (int c = 0; c < stats.num_classes; ++c) {
    if (stats.count[c] > 0) order.push_back(c);
  }
  if (head_count < 0 || middle_count < 0 ||
      std::size_t(head_count) + std::size_t(middle_count) >= order.size()) {
    throw ValidationError("head/middle counts must leave at least one tail class (" +
                          std::to_string(order.size()) + " classes have pixels)");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return stats.count[a] > stats.count[b]; });
  Partition part;
  part.head.assign(order.begin(), order.begin() + head_count);
  part.middle.assign(order.begin() + head_count, order.begin() + head_count + middle_count);
  part.tail.assign(order.begin() + head_count + middle_count, order.end());
  return part;
}

LabelGrid argmax_labels(const ScoreGrid& scores) {
  LabelGrid out(scores.height(), scores.width());
  for (std::size_t p = 0; p < scores.pixel_count(); ++p) {
    const auto s = scores.pixel(p);
    int best = 0;
    for (int c = 1; c < int(s.size()); ++c) {
      if (s[c] > s[best]) best = c;
    }
    out.at(p) = static_cast<std::uint16_t>(best);
  }
  return out;
}

MetricReport iou_report(std::span<const LabelGrid> predicted, std::span<const LabelGrid> truth,
                        const Partition& partition, int num_classes) {
  if (predicted.size() != truth.size()) throw ValidationError("prediction/truth count mismatch");
  std::vector<std::int64_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i].pixel_count() != truth[i].pixel_count()) {
      throw ValidationError("prediction/truth shape mismatch");
    }
    const auto pv = predicted[i].values();
    const auto tv = truth[i].values();
    for (std::size_t p = 0; p < tv.size(); ++p) {
      const std::uint16_t t = tv[p];
      if (t == kIgnoreLabel) continue;
      const std::uint16_t y = pv[p];
      if (t >= num_classes || y >= num_classes) throw ValidationError("label outside class range");
      if (y == t) {
        ++tp[t];
      } else {
        ++fn[t];
        ++fp[y];
      }
    }
  }

  MetricReport report;
  report.per_class_iou.resize(num_classes);
  std::vector<int> all(num_classes);
  std::iota(all.begin(), all.end(), 0);
  for (int c = 0; c < num_classes; ++c) {
    const std::int64_t denom = tp[c] + fp[c] + fn[c];
    if (denom > 0) report.per_class_iou[c] = double(tp[c]) / double(denom);
  }
  report.overall_miou = mean_defined(report.per_class_iou, all);
  report.head_miou = mean_defined(report.per_class_iou, partition.head);
  report.middle_miou = mean_defined(report.per_class_iou, partition.middle);
  report.tail_miou = mean_defined(report.per_class_iou, partition.tail);
  return report;
}

double ovo_auc_metric(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw ValidationError("score/label batch mismatch");
  }
  const int num_classes = scores.front().depth();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> members(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (scores[i].depth() != num_classes || scores[i].pixel_count() != labels[i].pixel_count()) {
      throw ValidationError("score/label shape mismatch");
    }
    const auto v = labels[i].values();
    for (std::size_t p = 0; p < v.size(); ++p) {
      if (v[p] == kIgnoreLabel) continue;
      if (v[p] >= num_classes) throw ValidationError("label outside class range");
      members[v[p]].push_back({i, p});
    }
  }
  std::vector<int> present;
  for (int c = 0; c < num_classes; ++c) {
    if (!members[c].empty()) present.push_back(c);
  }
  if (present.size() < 2) throw ValidationError("degenerate batch: AUC undefined");

  double sum = 0.0;
  std::int64_t pairs = 0;
  std::vector<double> pos, neg;
  for (int c : present) {
    pos.clear();
    for (auto [i, p] : members[c]) pos.push_back(scores[i].at(p, c));
    for (int other : present) {
      if (other == c) continue;
      neg.clear();
      for (auto [i, p] : members[other]) neg.push_back(scores[i].at(p, c));
      const std::int64_t u2 = twice_u_statistic(pos, neg);
      sum += double(u2) / (2.0 * double(pos.size()) * double(neg.size()));
      ++pairs;
    }
  }
  return sum / double(pairs);
}

namespace {

// Largest n_max(c)/n_sum(c) over classes with pixels, chosen by exact
// integer cross-multiplication; returned as (numerator, denominator).
std::pair<std::int64_t, std::int64_t> worst_concentration(const ClassStats& stats) {
  std::int64_t best_num = 0, best_den = 0;
  for (int c = 0; c < stats.num_classes; ++c) {
    if (stats.count[c] == 0) continue;
    std::int64_t n_max = 0;
    for (const auto& row : stats.per_image) n_max = std::max(n_max, row[c]);
    const std::int64_t n_sum = stats.count[c];
    if (best_den == 0 ||
        static_cast<__int128>(n_max) * best_den > static_cast<__int128>(best_num) * n_sum) {
      best_num = n_max;
      best_den = n_sum;
    }
  }
  if (best_den == 0) throw ValidationError("all class counts are zero");
  return {best_num, best_den};
}

}  // namespace

double compute_tau(const ClassStats& stats) {
  const auto [num, den] = worst_concentration(stats);
  const double ratio = double(num) / double(den);
  return ratio * ratio;
}

double tau_mean_normalized(const ClassStats& stats) {
  const auto [num, den] = worst_concentration(stats);
  const double ratio = double(num) * double(stats.image_count()) / double(den);
  return ratio * ratio;
}

double compute_rm(const ClassStats& stats, std::span<const int> head) {
  std::vector<bool> is_head(stats.num_classes, false);
  for (int c : head) {
    if (c < 0 || c >= stats.num_classes) throw ValidationError("head class out of range");
    is_head[c] = true;
  }
  std::vector<int> rest;
  for (int c = 0; c < stats.num_classes; ++c) {
    if (!is_head[c]) rest.push_back(c);
  }
  if (head.empty() || rest.empty()) throw ValidationError("head and non-head sets must be non-empty");
  for (int b : rest) {
    if (stats.count[b] == 0) {
      throw ValidationError("non-head class " + std::to_string(b) + " has zero pixels");
    }
  }
  double sum = 0.0;
  for (int a : head) {
    for (int b : rest) sum += double(stats.count[a]) / double(stats.count[b]);
  }
  return sum / (double(head.size()) * double(rest.size()));
}

}  // namespace aucseg
