#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aucseg/types.hpp"

namespace aucseg {

/// Probability that a randomly drawn image contains at least one pixel of
/// each class. Images are modelled as independent draws and classes as
/// independent Bernoulli events within an image.
struct PresenceModel {
  std::vector<double> p;

  int num_classes() const noexcept { return static_cast<int>(p.size()); }
  double min_presence() const;
  void validate() const;  // every p in (0, 1]
};

/// Smallest B with K * (1 - p_min)^B <= delta, i.e. the union-bound batch
/// size at which every class appears with probability >= 1 - delta.
/// Evaluated as ceil(ln(delta/K) / ln(1 - p_min)) and then nudged by +/-1
/// until the inequality holds exactly at B and fails at B - 1.
std::int64_t required_batch_size(const PresenceModel& model, double delta);

/// Fraction of `trials` in which B sampled images jointly cover every class.
/// Trial t draws from Rng::derived(seed, t), so the tally is independent of
/// the worker count.
double simulate_coverage(const PresenceModel& model, std::int64_t batch_size,
                         std::int64_t trials, std::uint64_t seed);

/// p[c] = (#images containing c) / (#images). Absent classes get p = 0,
/// which required_batch_size rejects.
PresenceModel empirical_presence(std::span<const LabelGrid> dataset, int num_classes);

}  // namespace aucseg
