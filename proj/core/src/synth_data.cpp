#include "aucseg/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "aucseg/rng.hpp"

namespace aucseg {

void GenConfig::validate() const {
  if (num_classes < 2) throw ValidationError("need at least two classes");
  if (num_classes >= kIgnoreLabel) throw ValidationError("too many classes");
  if (height < 1 || width < 1 || channels < 1) throw ValidationError("image geometry must be positive");
  if (images < 1) throw ValidationError("need at least one image");
  if (!(zipf_s >= 0.0) || !std::isfinite(zipf_s)) throw ValidationError("zipf exponent must be >= 0");
  if (shapes_per_class < 1) throw ValidationError("shapes per class must be >= 1");
  if (!(feature_noise_sigma >= 0.0) || !std::isfinite(feature_noise_sigma)) {
    throw ValidationError("feature noise must be >= 0");
  }
  if (!presence.empty()) {
    if (int(presence.size()) != num_classes) {
      throw ValidationError("presence needs one entry per class");
    }
    for (double p : presence) {
      if (!(p > 0.0 && p <= 1.0)) throw ValidationError("presence must lie in (0, 1]");
    }
  }
}

std::vector<double> default_presence(int num_classes, double tail_presence, double head_presence) {
  std::vector<double> p(num_classes, 1.0);
  if (num_classes < 2) return p;
  if (num_classes == 2) {
    p[1] = head_presence;
    return p;
  }
  const double ratio = tail_presence / head_presence;
  for (int c = 1; c < num_classes; ++c) {
    p[c] = head_presence * std::pow(ratio, double(c - 1) / double(num_classes - 2));
  }
  return p;
}

std::vector<double> zipf_shares(int num_classes, double zipf_s) {
  std::vector<double> w(num_classes);
  double total = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    w[c] = std::pow(double(c + 1), -zipf_s);
    total += w[c];
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<float> class_mean(int class_id, int num_classes, int channels) {
  std::vector<float> mean(channels);
  if (channels == 1) {
    mean[0] = float(-1.0 + 2.0 * class_id / double(num_classes - 1));
    return mean;
  }
  const double base = 2.0 * std::numbers::pi * class_id / double(num_classes);
  for (int ch = 0; ch < channels; ++ch) {
    const double angle = base * double(ch / 2 + 1);
    mean[ch] = float(ch % 2 == 0 ? std::cos(angle) : std::sin(angle));
  }
  return mean;
}

GeneratedData generate(const GenConfig& config) {
  config.validate();
  const int k = config.num_classes;
  const int h = config.height;
  const int w = config.width;
  const std::vector<double> presence =
      config.presence.empty() ? default_presence(k) : config.presence;
  const std::vector<double> shares = zipf_shares(k, config.zipf_s);
  std::vector<std::vector<float>> means(k);
  for (int c = 0; c < k; ++c) means[c] = class_mean(c, k, config.channels);

  const double log_half = std::log(0.5);
  Rng rng(config.seed);
  GeneratedData out;
  out.dataset = {k, h, w, config.channels, {}};
  out.dataset.samples.reserve(config.images);

  for (int img = 0; img < config.images; ++img) {
    LabelGrid labels(h, w, 0);
    std::vector<std::int64_t> counts(k, 0);
    counts[0] = std::int64_t(h) * w;
    std::vector<std::uint8_t> drawn(k, 0);
    drawn[0] = 1;

    for (int c = 1; c < k; ++c) {
      if (!rng.bernoulli(presence[c])) continue;
      drawn[c] = 1;
      const double area = shares[c] * h * w / config.shapes_per_class;
      for (int s = 0; s < config.shapes_per_class; ++s) {
        // Aspect ratio log-uniform in [1/2, 2].
        const double aspect = std::exp(log_half + rng.uniform() * (-2.0 * log_half));
        int rh = 1, rw = 1;
        if (area >= 1.0) {
          rh = std::clamp(int(std::lround(std::sqrt(area * aspect))), 1, h);
          rw = std::clamp(int(std::lround(area / rh)), 1, w);
        }
        const int top = int(rng.below(std::uint64_t(h - rh + 1)));
        const int left = int(rng.below(std::uint64_t(w - rw + 1)));
        for (int r = top; r < top + rh; ++r) {
          for (int col = left; col < left + rw; ++col) {
            std::uint16_t& cell = labels.at(r, col);
            if (cell != c) {
              --counts[cell];
              ++counts[c];
              cell = static_cast<std::uint16_t>(c);
            }
          }
        }
      }
    }

    FeatureGrid features(h, w, config.channels);
    for (std::size_t p = 0; p < labels.pixel_count(); ++p) {
      const auto& mu = means[labels.at(p)];
      for (int ch = 0; ch < config.channels; ++ch) {
        const double noise =
            config.feature_noise_sigma > 0.0 ? config.feature_noise_sigma * rng.normal() : 0.0;
        features.at(p, ch) = float(mu[ch] + noise);
      }
    }

    out.dataset.samples.push_back({std::move(features), std::move(labels)});
    out.truth.painted_counts.push_back(std::move(counts));
    out.truth.drawn.push_back(std::move(drawn));
  }
  return out;
}

}  // namespace aucseg
