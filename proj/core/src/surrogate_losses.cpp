#include "aucseg/surrogate_losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aucseg/parallel.hpp"

namespace aucseg {

namespace {

void check_pair_inputs(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw ValidationError("empty class");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(pos.begin(), pos.end(), finite) ||
      !std::all_of(neg.begin(), neg.end(), finite)) {
    throw ValidationError("non-finite score");
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Pairs (a, b) with 1 - (a - b) > 0 contribute to the hinge; kept as a
// single function so both the naive and sorted kernels use it verbatim.
inline bool hinge_active(double a, double b) { return 1.0 - (a - b) > 0.0; }

void check_batch(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels) {
  if (scores.empty()) throw ValidationError("empty batch");
  if (scores.size() != labels.size()) {
    throw ValidationError("score and label batch sizes differ");
  }
  const int k = scores.front().depth();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].depth() != k || scores[i].height() != labels[i].height() ||
        scores[i].width() != labels[i].width()) {
      throw ValidationError("score/label shape mismatch at item " + std::to_string(i));
    }
    labels[i].check_classes(k);
  }
}

struct PixelRef {
  std::uint32_t item;
  std::uint32_t pixel;
};

// Non-ignored pixels grouped by label, in (item, pixel) order.
std::vector<std::vector<PixelRef>> group_by_class(std::span<const LabelGrid> labels,
                                                  int num_classes) {
  std::vector<std::vector<PixelRef>> members(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto values = labels[i].values();
    for (std::size_t p = 0; p < values.size(); ++p) {
      if (values[p] != kIgnoreLabel) {
        members[values[p]].push_back({std::uint32_t(i), std::uint32_t(p)});
      }
    }
  }
  return members;
}

std::vector<GradientGrid> zero_gradient(std::span<const ScoreGrid> scores) {
  std::vector<GradientGrid> g;
  g.reserve(scores.size());
  for (const ScoreGrid& s : scores) g.emplace_back(s.height(), s.width(), s.depth(), 0.0);
  return g;
}

void gather(std::span<const ScoreGrid> scores, const std::vector<PixelRef>& refs, int channel,
            std::vector<double>& out) {
  out.resize(refs.size());
  for (std::size_t j = 0; j < refs.size(); ++j) {
    out[j] = scores[refs[j].item].at(refs[j].pixel, channel);
  }
}

void scatter_add(std::vector<GradientGrid>& grad, const std::vector<PixelRef>& refs,
                 int channel, std::span<const double> values, double weight) {
  for (std::size_t j = 0; j < refs.size(); ++j) {
    grad[refs[j].item].at(refs[j].pixel, channel) += weight * values[j];
  }
}

}  // namespace

std::string_view to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::kSquare: return "square";
    case SurrogateKind::kHinge: return "hinge";
    case SurrogateKind::kExponential: return "exp";
  }
  return "unknown";
}

std::string_view to_string(AucMode mode) {
  return mode == AucMode::kOneVsOne ? "ovo" : "ova";
}

std::string_view to_string(PairNormalization norm) {
  return norm == PairNormalization::kUnionCounts ? "union" : "original";
}

SurrogateKind parse_surrogate(std::string_view name) {
  if (name == "square") return SurrogateKind::kSquare;
  if (name == "hinge") return SurrogateKind::kHinge;
  if (name == "exp" || name == "exponential") return SurrogateKind::kExponential;
  throw ValidationError("unknown surrogate '" + std::string(name) + "'");
}

AucMode parse_auc_mode(std::string_view name) {
  if (name == "ovo") return AucMode::kOneVsOne;
  if (name == "ova") return AucMode::kOneVsAll;
  throw ValidationError("unknown AUC mode '" + std::string(name) + "'");
}

PairNormalization parse_pair_normalization(std::string_view name) {
  if (name == "union") return PairNormalization::kUnionCounts;
  if (name == "original") return PairNormalization::kOriginalCounts;
  throw ValidationError("unknown pair normalization '" + std::string(name) + "'");
}

double surrogate_value(SurrogateKind kind, double x) {
  switch (kind) {
    case SurrogateKind::kSquare: return (1.0 - x) * (1.0 - x);
    case SurrogateKind::kHinge: return std::max(0.0, 1.0 - x);
    case SurrogateKind::kExponential: return std::exp(-x);
  }
  return 0.0;
}

double surrogate_slope(SurrogateKind kind, double x) {
  switch (kind) {
    case SurrogateKind::kSquare: return -2.0 * (1.0 - x);
    case SurrogateKind::kHinge: return 1.0 - x > 0.0 ? -1.0 : 0.0;
    case SurrogateKind::kExponential: return -std::exp(-x);
  }
  return 0.0;
}

PairLossResult pair_loss_naive(std::span<const double> pos, std::span<const double> neg,
                               SurrogateKind kind) {
  check_pair_inputs(pos, neg);
  const double inv_pairs = 1.0 / (static_cast<double>(pos.size()) * neg.size());
  PairLossResult r;
  r.grad_pos.assign(pos.size(), 0.0);
  r.grad_neg.assign(neg.size(), 0.0);
  double total = 0.0;
  for (std::size_t m = 0; m < pos.size(); ++m) {
    for (std::size_t n = 0; n < neg.size(); ++n) {
      double x = pos[m] - neg[n];
      double slope;
      if (kind == SurrogateKind::kHinge) {
        const bool active = hinge_active(pos[m], neg[n]);
        total += active ? 1.0 - x : 0.0;
        slope = active ? -1.0 : 0.0;
      } else {
        total += surrogate_value(kind, x);
        slope = surrogate_slope(kind, x);
      }
      r.grad_pos[m] += slope;
      r.grad_neg[n] -= slope;
    }
  }
  r.loss = total * inv_pairs;
  for (double& g : r.grad_pos) g *= inv_pairs;
  for (double& g : r.grad_neg) g *= inv_pairs;
  return r;
}

PairLossResult pair_loss_square_fast(std::span<const double> pos,
                                     std::span<const double> neg) {
  check_pair_inputs(pos, neg);
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  const double mean_a = mean_of(pos);
  const double mean_b = mean_of(neg);
  double var_a = 0.0;
  for (double a : pos) var_a += (a - mean_a) * (a - mean_a);
  var_a /= np;
  double var_b = 0.0;
  for (double b : neg) var_b += (b - mean_b) * (b - mean_b);
  var_b /= nn;

  const double gap = 1.0 - mean_a + mean_b;
  PairLossResult r;
  r.loss = gap * gap + var_a + var_b;
  r.grad_pos.resize(pos.size());
  r.grad_neg.resize(neg.size());
  for (std::size_t m = 0; m < pos.size(); ++m) {
    r.grad_pos[m] = -2.0 * (1.0 - pos[m] + mean_b) / np;
  }
  for (std::size_t n = 0; n < neg.size(); ++n) {
    r.grad_neg[n] = 2.0 * (1.0 - mean_a + neg[n]) / nn;
  }
  return r;
}

PairLossResult pair_loss_exp_fast(std::span<const double> pos, std::span<const double> neg) {
  check_pair_inputs(pos, neg);
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  std::vector<double> exp_neg_a(pos.size());
  std::vector<double> exp_b(neg.size());
  for (std::size_t m = 0; m < pos.size(); ++m) exp_neg_a[m] = std::exp(-pos[m]);
  for (std::size_t n = 0; n < neg.size(); ++n) exp_b[n] = std::exp(neg[n]);
  const double mean_ea = mean_of(exp_neg_a);
  const double mean_eb = mean_of(exp_b);

  PairLossResult r;
  r.loss = mean_ea * mean_eb;
  r.grad_pos.resize(pos.size());
  r.grad_neg.resize(neg.size());
  for (std::size_t m = 0; m < pos.size(); ++m) r.grad_pos[m] = -exp_neg_a[m] * mean_eb / np;
  for (std::size_t n = 0; n < neg.size(); ++n) r.grad_neg[n] = exp_b[n] * mean_ea / nn;
  return r;
}

PairLossResult pair_loss_hinge_sorted(std::span<const double> pos,
                                      std::span<const double> neg) {
  check_pair_inputs(pos, neg);
  const double inv_pairs = 1.0 / (static_cast<double>(pos.size()) * neg.size());

  std::vector<double> sorted_neg(neg.begin(), neg.end());
  std::sort(sorted_neg.begin(), sorted_neg.end());
  std::vector<double> prefix(sorted_neg.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted_neg.size(); ++i) prefix[i + 1] = prefix[i] + sorted_neg[i];

  std::vector<double> sorted_pos(pos.begin(), pos.end());
  std::sort(sorted_pos.begin(), sorted_pos.end());

  PairLossResult r;
  r.grad_pos.resize(pos.size());
  r.grad_neg.resize(neg.size());
  double total = 0.0;
  // For fixed a the active predicate is monotone in b, so the active
  // negatives form a suffix of sorted_neg.
  for (std::size_t m = 0; m < pos.size(); ++m) {
    const double a = pos[m];
    const auto first = std::partition_point(sorted_neg.begin(), sorted_neg.end(),
                                            [a](double b) { return !hinge_active(a, b); });
    const auto idx = static_cast<std::size_t>(first - sorted_neg.begin());
    const double active = static_cast<double>(sorted_neg.size() - idx);
    total += active * (1.0 - a) + (prefix.back() - prefix[idx]);
    r.grad_pos[m] = -active * inv_pairs;
  }
  // For fixed b the active positives form a prefix of sorted_pos.
  for (std::size_t n = 0; n < neg.size(); ++n) {
    const double b = neg[n];
    const auto end = std::partition_point(sorted_pos.begin(), sorted_pos.end(),
                                          [b](double a) { return hinge_active(a, b); });
    r.grad_neg[n] = static_cast<double>(end - sorted_pos.begin()) * inv_pairs;
  }
  r.loss = total * inv_pairs;
  return r;
}

PairLossResult pair_loss(std::span<const double> pos, std::span<const double> neg,
                         SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::kSquare: return pair_loss_square_fast(pos, neg);
    case SurrogateKind::kHinge: return pair_loss_hinge_sorted(pos, neg);
    case SurrogateKind::kExponential: return pair_loss_exp_fast(pos, neg);
  }
  throw ValidationError("unknown surrogate");
}

LossReport ovo_auc_loss(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels,
                        SurrogateKind kind, const PastedPixels* pasted) {
  check_batch(scores, labels);
  const int num_classes = scores.front().depth();
  if (num_classes < 2) throw ValidationError("degenerate batch: AUC undefined");
  if (pasted != nullptr && pasted->masks.size() != scores.size()) {
    throw ValidationError("paste mask count does not match batch size");
  }

  const auto members = group_by_class(labels, num_classes);
  std::vector<int> present;
  for (int c = 0; c < num_classes; ++c) {
    if (!members[c].empty()) present.push_back(c);
  }
  if (present.size() < 2) throw ValidationError("degenerate batch: AUC undefined");

  // Per-class denominators; each pair term is rescaled from a mean over the
  // union to the configured denominator.
  std::vector<double> union_count(num_classes), norm_count(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    union_count[c] = static_cast<double>(members[c].size());
    norm_count[c] = union_count[c];
    if (pasted != nullptr && pasted->normalization == PairNormalization::kOriginalCounts) {
      std::size_t original = 0;
      for (const PixelRef& ref : members[c]) {
        if (pasted->masks[ref.item][ref.pixel] == 0) ++original;
      }
      if (original > 0) norm_count[c] = static_cast<double>(original);
    }
  }

  LossReport report;
  report.gradient = zero_gradient(scores);
  std::vector<double> class_loss(present.size(), 0.0);

  // Class c only touches channel c of the gradient, so classes run in
  // parallel without sharing writes; the final sum is in class order.
  parallel_for(present.size(), [&](std::size_t ci) {
    const int c = present[ci];
    std::vector<double> pos, neg;
    gather(scores, members[c], c, pos);
    std::vector<double> grad_pos_sum(pos.size(), 0.0);
    double loss = 0.0;
    for (int other : present) {
      if (other == c) continue;
      gather(scores, members[other], c, neg);
      const PairLossResult r = pair_loss(pos, neg, kind);
      const double weight =
          (union_count[c] * union_count[other]) / (norm_count[c] * norm_count[other]);
      loss += weight * r.loss;
      for (std::size_t j = 0; j < pos.size(); ++j) grad_pos_sum[j] += weight * r.grad_pos[j];
      scatter_add(report.gradient, members[other], c, r.grad_neg, weight);
    }
    scatter_add(report.gradient, members[c], c, grad_pos_sum, 1.0);
    class_loss[ci] = loss;
  });

  for (double l : class_loss) report.loss += l;
  return report;
}

LossReport ova_auc_loss(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels,
                        SurrogateKind kind) {
  check_batch(scores, labels);
  const int num_classes = scores.front().depth();
  if (num_classes < 2) throw ValidationError("degenerate batch: AUC undefined");

  const auto members = group_by_class(labels, num_classes);
  std::vector<int> present;
  for (int c = 0; c < num_classes; ++c) {
    if (!members[c].empty()) present.push_back(c);
  }
  if (present.size() < 2) throw ValidationError("degenerate batch: AUC undefined");

  LossReport report;
  report.gradient = zero_gradient(scores);
  std::vector<double> class_loss(present.size(), 0.0);
  parallel_for(present.size(), [&](std::size_t ci) {
    const int c = present[ci];
    std::vector<PixelRef> rest;
    for (int other : present) {
      if (other != c) rest.insert(rest.end(), members[other].begin(), members[other].end());
    }
    std::vector<double> pos, neg;
    gather(scores, members[c], c, pos);
    gather(scores, rest, c, neg);
    const PairLossResult r = pair_loss(pos, neg, kind);
    scatter_add(report.gradient, members[c], c, r.grad_pos, 1.0);
    scatter_add(report.gradient, rest, c, r.grad_neg, 1.0);
    class_loss[ci] = r.loss;
  });
  for (double l : class_loss) report.loss += l;
  return report;
}

LossReport ce_loss(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels) {
  check_batch(scores, labels);
  std::size_t counted = 0;
  for (const LabelGrid& l : labels) {
    for (std::uint16_t v : l.values()) counted += v != kIgnoreLabel;
  }
  if (counted == 0) throw ValidationError("no labeled pixels: cross-entropy undefined");

  const double inv = 1.0 / static_cast<double>(counted);
  LossReport report;
  report.gradient = zero_gradient(scores);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto values = labels[i].values();
    for (std::size_t p = 0; p < values.size(); ++p) {
      if (values[p] == kIgnoreLabel) continue;
      const double s = std::max(scores[i].at(p, values[p]), kCeScoreFloor);
      total -= std::log(s);
      report.gradient[i].at(p, values[p]) = -inv / s;
    }
  }
  report.loss = total * inv;
  return report;
}

LossReport combined_loss(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels,
                         SurrogateKind kind, AucMode mode, double lambda,
                         const PastedPixels* pasted) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("CE weight must be a finite non-negative number");
  }
  LossReport report = mode == AucMode::kOneVsOne ? ovo_auc_loss(scores, labels, kind, pasted)
                                                 : ova_auc_loss(scores, labels, kind);
  if (lambda == 0.0) return report;
  const LossReport ce = ce_loss(scores, labels);
  report.loss += lambda * ce.loss;
  for (std::size_t i = 0; i < report.gradient.size(); ++i) {
    auto dst = report.gradient[i].values();
    auto src = ce.gradient[i].values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += lambda * src[j];
  }
  return report;
}

ScoreGrid softmax_head(const LogitGrid& logits) {
  ScoreGrid out(logits.height(), logits.width(), logits.depth());
  const int k = logits.depth();
  for (std::size_t p = 0; p < logits.pixel_count(); ++p) {
    const auto z = logits.pixel(p);
    double top = z[0];
    for (double v : z) {
      if (!std::isfinite(v)) throw NumericalError("non-finite logit");
      top = std::max(top, v);
    }
    auto s = out.pixel(p);
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
      s[c] = std::exp(z[c] - top);
      sum += s[c];
    }
    for (int c = 0; c < k; ++c) s[c] /= sum;
  }
  return out;
}

GradientGrid softmax_backward(const ScoreGrid& scores, const GradientGrid& grad_scores) {
  if (scores.height() != grad_scores.height() || scores.width() != grad_scores.width() ||
      scores.depth() != grad_scores.depth()) {
    throw ValidationError("softmax_backward shape mismatch");
  }
  GradientGrid out(scores.height(), scores.width(), scores.depth());
  for (std::size_t p = 0; p < scores.pixel_count(); ++p) {
    const auto s = scores.pixel(p);
    const auto g = grad_scores.pixel(p);
    double dot = 0.0;
    for (std::size_t c = 0; c < s.size(); ++c) dot += s[c] * g[c];
    auto dz = out.pixel(p);
    for (std::size_t c = 0; c < s.size(); ++c) dz[c] = s[c] * (g[c] - dot);
  }
  return out;
}

}  // namespace aucseg
