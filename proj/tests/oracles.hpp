#pragma once

// Test-only reference implementations. Nothing here calls into the
// library's loss or metric code paths; they recompute everything from raw
// scores and labels with explicit loops.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "aucseg/rng.hpp"
#include "aucseg/surrogate_losses.hpp"
#include "aucseg/types.hpp"

namespace aucseg::oracle {

inline double surrogate(SurrogateKind kind, double x) {
  switch (kind) {
    case SurrogateKind::kSquare: return (1.0 - x) * (1.0 - x);
    case SurrogateKind::kHinge: return 1.0 - x > 0.0 ? 1.0 - x : 0.0;
    case SurrogateKind::kExponential: return std::exp(-x);
  }
  return 0.0;
}

inline double surrogate_derivative(SurrogateKind kind, double x) {
  switch (kind) {
    case SurrogateKind::kSquare: return 2.0 * (x - 1.0);
    case SurrogateKind::kHinge: return 1.0 - x > 0.0 ? -1.0 : 0.0;
    case SurrogateKind::kExponential: return -std::exp(-x);
  }
  return 0.0;
}

struct BruteLoss {
  double loss = 0.0;
  std::vector<std::vector<double>> grad;  // [item][pixel * K + class]
};

/// Materialises every (ordered class pair, pixel pair) term. With `pasted`
/// non-empty and `original_counts` set, class denominators count only
/// non-pasted pixels (falling back to all pixels when that count is zero).
inline BruteLoss brute_ovo(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels,
                           SurrogateKind kind,
                           std::span<const std::vector<std::uint8_t>> pasted = {},
                           bool original_counts = false) {
  const int k = scores[0].depth();
  struct Px {
    std::size_t item, pixel;
    int label;
    bool pasted;
  };
  std::vector<Px> pixels;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t p = 0; p < labels[i].pixel_count(); ++p) {
      const auto v = labels[i].at(p);
      if (v == kIgnoreLabel) continue;
      pixels.push_back({i, p, int(v), !pasted.empty() && pasted[i][p] != 0});
    }
  }
  std::vector<double> all(k, 0.0), orig(k, 0.0);
  for (const Px& px : pixels) {
    all[px.label] += 1;
    if (!px.pasted) orig[px.label] += 1;
  }
  auto den = [&](int c) { return original_counts && orig[c] > 0 ? orig[c] : all[c]; };

  BruteLoss out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.grad.emplace_back(scores[i].values().size(), 0.0);
  for (int c = 0; c < k; ++c) {
    for (int c2 = 0; c2 < k; ++c2) {
      if (c2 == c || all[c] == 0 || all[c2] == 0) continue;
      const double w = 1.0 / (den(c) * den(c2));
      for (const Px& m : pixels) {
        if (m.label != c) continue;
        for (const Px& n : pixels) {
          if (n.label != c2) continue;
          const double x = scores[m.item].at(m.pixel, c) - scores[n.item].at(n.pixel, c);
          out.loss += w * surrogate(kind, x);
          const double d = w * surrogate_derivative(kind, x);
          out.grad[m.item][m.pixel * k + c] += d;
          out.grad[n.item][n.pixel * k + c] -= d;
        }
      }
    }
  }
  return out;
}

/// One-vs-all counterpart of brute_ovo.
inline BruteLoss brute_ova(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels,
                           SurrogateKind kind) {
  const int k = scores[0].depth();
  BruteLoss out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.grad.emplace_back(scores[i].values().size(), 0.0);
  for (int c = 0; c < k; ++c) {
    double np = 0, nn = 0;
    for (const auto& l : labels) {
      for (auto v : l.values()) {
        if (v == kIgnoreLabel) continue;
        (v == c ? np : nn) += 1;
      }
    }
    if (np == 0 || nn == 0) continue;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t p = 0; p < labels[i].pixel_count(); ++p) {
        if (labels[i].at(p) != c) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
          for (std::size_t q = 0; q < labels[j].pixel_count(); ++q) {
            const auto v = labels[j].at(q);
            if (v == kIgnoreLabel || v == c) continue;
            const double x = scores[i].at(p, c) - scores[j].at(q, c);
            out.loss += surrogate(kind, x) / (np * nn);
            const double d = surrogate_derivative(kind, x) / (np * nn);
            out.grad[i][p * k + c] += d;
            out.grad[j][q * k + c] -= d;
          }
        }
      }
    }
  }
  return out;
}

/// Exact pair-counting OvO AUC (ties = 1/2), averaged over realised pairs.
inline double brute_auc(std::span<const ScoreGrid> scores, std::span<const LabelGrid> labels) {
  const int k = scores[0].depth();
  double sum = 0.0;
  int pairs = 0;
  for (int c = 0; c < k; ++c) {
    for (int c2 = 0; c2 < k; ++c2) {
      if (c == c2) continue;
      std::int64_t twice_wins = 0, np = 0, nn = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t p = 0; p < labels[i].pixel_count(); ++p) {
          if (labels[i].at(p) == c) ++np;
          if (labels[i].at(p) == c2) ++nn;
        }
      }
      if (np == 0 || nn == 0) continue;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t p = 0; p < labels[i].pixel_count(); ++p) {
          if (labels[i].at(p) != c) continue;
          for (std::size_t j = 0; j < labels.size(); ++j) {
            for (std::size_t q = 0; q < labels[j].pixel_count(); ++q) {
              if (labels[j].at(q) != c2) continue;
              const double a = scores[i].at(p, c), b = scores[j].at(q, c);
              twice_wins += a > b ? 2 : (a == b ? 1 : 0);
            }
          }
        }
      }
      sum += double(twice_wins) / (2.0 * double(np) * double(nn));
      ++pairs;
    }
  }
  return sum / pairs;
}

/// Central difference of f around x[i] with step h.
inline double central_difference(const std::function<double(std::span<const double>)>& f,
                                 std::vector<double> x, std::size_t i, double h = 1e-5) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// |a - b| relative to the larger magnitude, floored at `floor`.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline std::vector<double> random_scores(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform();
  return v;
}

/// Random batch of softmax-like score grids (positive, summing to 1).
inline std::vector<ScoreGrid> random_score_grids(Rng& rng, std::size_t items, int h, int w, int k) {
  std::vector<ScoreGrid> out;
  for (std::size_t i = 0; i < items; ++i) {
    ScoreGrid s(h, w, k);
    for (std::size_t p = 0; p < s.pixel_count(); ++p) {
      double sum = 0.0;
      for (int c = 0; c < k; ++c) sum += (s.at(p, c) = 0.05 + rng.uniform());
      for (int c = 0; c < k; ++c) s.at(p, c) /= sum;
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<LabelGrid> random_label_grids(Rng& rng, std::size_t items, int h, int w, int k,
                                                 double ignore_rate = 0.0) {
  std::vector<LabelGrid> out;
  for (std::size_t i = 0; i < items; ++i) {
    LabelGrid l(h, w);
    for (auto& v : l.values()) {
      v = rng.uniform() < ignore_rate ? kIgnoreLabel : std::uint16_t(rng.below(std::uint64_t(k)));
    }
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace aucseg::oracle
