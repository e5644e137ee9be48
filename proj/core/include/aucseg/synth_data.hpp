#pragma once

#include <cstdint>
#include <vector>

#include "aucseg/types.hpp"

namespace aucseg {

/// Long-tail synthetic labeling problem. Class 0 is the background and
/// fills every image; each other class c is painted with probability
/// presence[c] as `shapes_per_class` rectangles whose total area is the
/// zipf share (c+1)^-s / sum_j (j+1)^-s of the image. Classes are painted
/// in increasing index order, so rarer classes overwrite commoner ones.
struct GenConfig {
  int num_classes = 12;
  int height = 48;
  int width = 48;
  int channels = 3;
  int images = 400;
  double zipf_s = 1.2;
  /// Empty means default_presence(num_classes).
  std::vector<double> presence;
  int shapes_per_class = 2;
  double feature_noise_sigma = 0.6;
  std::uint64_t seed = 0;

  void validate() const;
};

/// presence[0] = 1; classes 1..K-1 decay geometrically from head_presence
/// to tail_presence.
std::vector<double> default_presence(int num_classes, double tail_presence = 0.05,
                                     double head_presence = 0.9);

/// Pixel share targeted for each class under the zipf exponent.
std::vector<double> zipf_shares(int num_classes, double zipf_s);

/// Noise-free feature vector of a class: channel pairs hold cos/sin of
/// successive harmonics of 2*pi*c/K, so class means are pairwise distinct.
std::vector<float> class_mean(int class_id, int num_classes, int channels);

/// What the generator did, tallied while painting.
struct GeneratorTruth {
  /// Final pixel count of every class in every image ([image][class]).
  std::vector<std::vector<std::int64_t>> painted_counts;
  /// Whether class c was drawn for painting in image i ([image][class]).
  std::vector<std::vector<std::uint8_t>> drawn;
};

struct GeneratedData {
  LabeledDataset dataset;
  GeneratorTruth truth;
};

GeneratedData generate(const GenConfig& config);

}  // namespace aucseg
