#include "aucseg/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aucseg/parallel.hpp"
#include "aucseg/rng.hpp"

namespace aucseg {

double PresenceModel::min_presence() const {
  if (p.empty()) throw ValidationError("presence model has no classes");
  return *std::min_element(p.begin(), p.end());
}

void PresenceModel::validate() const {
  if (p.empty()) throw ValidationError("presence model has no classes");
  for (double v : p) {
    if (!(v > 0.0 && v <= 1.0)) throw ValidationError("presence probability outside (0, 1]");
  }
}

std::int64_t required_batch_size(const PresenceModel& model, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  const double p_min = model.min_presence();
  if (p_min <= 0.0) throw ValidationError("class never present: no finite B");
  model.validate();
  if (p_min >= 1.0) return 1;

  const double k = model.num_classes();
  const double log_miss = std::log1p(-p_min);
  auto holds = [&](std::int64_t b) { return k * std::exp(double(b) * log_miss) <= delta; };

  auto b = static_cast<std::int64_t>(std::ceil(std::log(delta / k) / log_miss));
  b = std::max<std::int64_t>(b, 1);
  while (!holds(b)) ++b;
  while (b > 1 && holds(b - 1)) --b;
  return b;
}

double simulate_coverage(const PresenceModel& model, std::int64_t batch_size,
                         std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw ValidationError("trials must be at least 1");
  if (batch_size < 0) throw ValidationError("batch size must be non-negative");
  model.validate();

  const std::size_t workers = std::size_t(std::max(1, thread_count()));
  const std::size_t chunks = std::min<std::size_t>(workers * 4, std::size_t(trials));
  std::vector<std::int64_t> covered(chunks, 0);
  parallel_for(chunks, [&](std::size_t chunk) {
    const std::int64_t begin = trials * std::int64_t(chunk) / std::int64_t(chunks);
    const std::int64_t end = trials * std::int64_t(chunk + 1) / std::int64_t(chunks);
    std::int64_t hits = 0;
    for (std::int64_t t = begin; t < end; ++t) {
      Rng rng = Rng::derived(seed, std::uint64_t(t));
      bool all = true;
      // Class-major order: draw images for class c until it shows up. With
      // independent presence this has the same law as image-major drawing.
      for (double p : model.p) {
        bool seen = false;
        for (std::int64_t img = 0; img < batch_size && !seen; ++img) seen = rng.bernoulli(p);
        if (!seen) {
          all = false;
          break;
        }
      }
      hits += all;
    }
    covered[chunk] = hits;
  });
  const std::int64_t total = std::accumulate(covered.begin(), covered.end(), std::int64_t{0});
  return double(total) / double(trials);
}

PresenceModel empirical_presence(std::span<const LabelGrid> dataset, int num_classes) {
  const ClassStats stats = class_stats(dataset, num_classes);
  PresenceModel model;
  model.p.assign(num_classes, 0.0);
  for (std::size_t i = 0; i < stats.image_count(); ++i) {
    for (int c = 0; c < num_classes; ++c) model.p[c] += stats.present(i, c) ? 1.0 : 0.0;
  }
  for (double& v : model.p) v /= double(stats.image_count());
  return model;
}

}  // namespace aucseg
