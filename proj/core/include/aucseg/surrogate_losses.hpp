#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "aucseg/types.hpp"

namespace aucseg {

/// Pairwise surrogate applied to x = (positive score) - (negative score):
///   kSquare       (1 - x)^2
///   kHinge        max(0, 1 - x)
///   kExponential  exp(-x)
enum class SurrogateKind { kSquare, kHinge, kExponential };

/// One-vs-one ranks class c against every other class c' under score
/// channel c; one-vs-all ranks class c against all remaining pixels.
enum class AucMode { kOneVsOne, kOneVsAll };

/// Denominator used for pair terms when bank pixels were pasted into the
/// batch. kUnionCounts divides by the number of pixels actually summed over
/// (original plus pasted), so every term is a true mean. kOriginalCounts
/// divides by the non-pasted pixel counts only; for a class with no
/// original pixels it falls back to the union count.
enum class PairNormalization { kUnionCounts, kOriginalCounts };

/// Weight of the cross-entropy regulariser in the combined objective.
inline constexpr double kDefaultCeWeight = 0.25;
/// Lower clamp applied to the true-class score before taking its log.
inline constexpr double kCeScoreFloor = 1e-12;

std::string_view to_string(SurrogateKind kind);
std::string_view to_string(AucMode mode);
std::string_view to_string(PairNormalization norm);
SurrogateKind parse_surrogate(std::string_view name);
AucMode parse_auc_mode(std::string_view name);
PairNormalization parse_pair_normalization(std::string_view name);

double surrogate_value(SurrogateKind kind, double x);
/// d/dx of surrogate_value; the hinge subgradient at x == 1 is 0.
double surrogate_slope(SurrogateKind kind, double x);

/// Mean surrogate over all positive/negative pairs and its exact partial
/// derivatives with respect to every input score.
struct PairLossResult {
  double loss = 0.0;
  std::vector<double> grad_pos;
  std::vector<double> grad_neg;
};

/// Reference O(n+ * n-) evaluation by explicit double loop.
PairLossResult pair_loss_naive(std::span<const double> pos, std::span<const double> neg,
                               SurrogateKind kind);

/// O(n+ + n-) square loss. The pair mean of (1 - a + b)^2 equals
/// (mean(1-a) + mean(b))^2 + var(a) + var(b) for population variances.
PairLossResult pair_loss_square_fast(std::span<const double> pos,
                                     std::span<const double> neg);

/// O(n+ + n-) exponential loss: mean exp(b - a) = mean(exp(-a)) * mean(exp(b)).
PairLossResult pair_loss_exp_fast(std::span<const double> pos, std::span<const double> neg);

/// O((n+ + n-) log) hinge loss using sorted scores and prefix sums. A pair
/// is active under exactly the predicate the naive kernel uses, so the
/// active set and the gradient counts agree bit-for-bit.
PairLossResult pair_loss_hinge_sorted(std::span<const double> pos,
                                      std::span<const double> neg);

/// Dispatches to the fast kernel for `kind`.
PairLossResult pair_loss(std::span<const double> pos, std::span<const double> neg,
                         SurrogateKind kind);

/// Marks which pixels of an augmented batch were written by the memory bank.
struct PastedPixels {
  std::span<const std::vector<std::uint8_t>> masks;  // one per batch item
  PairNormalization normalization = PairNormalization::kUnionCounts;
};

/// Pooled one-vs-one AUC risk over a batch. Sums, over every ordered pair of
/// classes (c, c') present in the batch, the mean surrogate between the
/// channel-c scores of class-c pixels and the channel-c scores of class-c'
/// pixels. Absent classes are skipped; fewer than two present classes is an
/// error. Gradients are with respect to scores.
LossReport ovo_auc_loss(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels,
                        SurrogateKind kind, const PastedPixels* pasted = nullptr);

/// One-vs-all variant: class c against every non-c pixel, under channel c.
LossReport ova_auc_loss(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels,
                        SurrogateKind kind);

/// Mean over non-ignored pixels of -log(max(score of true class, 1e-12)).
LossReport ce_loss(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels);

/// auc + lambda * ce, with the gradient combined the same way.
LossReport combined_loss(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels,
                         SurrogateKind kind, AucMode mode, double lambda,
                         const PastedPixels* pasted = nullptr);

/// Max-subtracted softmax over the depth axis.
ScoreGrid softmax_head(const LogitGrid& logits);

/// Pulls d(loss)/d(scores) back through softmax:
///   dz_k = s_k * (g_k - sum_j s_j g_j)
GradientGrid softmax_backward(const ScoreGrid& scores, const GradientGrid& grad_scores);

}  // namespace aucseg
