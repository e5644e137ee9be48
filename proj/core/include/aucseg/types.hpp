#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aucseg/error.hpp"

namespace aucseg {

/// Label value reserved for pixels that take part in no loss, metric or
/// bank extraction. Lies outside every valid class range.
inline constexpr std::uint16_t kIgnoreLabel = 0xFFFF;

/// Dense height x width x depth array, depth-contiguous per pixel. The tag
/// keeps features, scores, logits and gradients from being mixed up.
template <typename T, typename Tag>
class Grid3 {
 public:
  using value_type = T;

  Grid3() = default;
  Grid3(int height, int width, int depth, T fill = T{})
      : height_(height), width_(width), depth_(depth) {
    if (height < 1 || width < 1 || depth < 1) {
      throw ValidationError("grid dimensions must be positive");
    }
    values_.assign(static_cast<std::size_t>(height) * width * depth, fill);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int depth() const noexcept { return depth_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }

  T& at(std::size_t pixel, int k) { return values_[pixel * depth_ + k]; }
  const T& at(std::size_t pixel, int k) const { return values_[pixel * depth_ + k]; }
  T& at(int row, int col, int k) { return at(index(row, col), k); }
  const T& at(int row, int col, int k) const { return at(index(row, col), k); }

  std::span<T> pixel(std::size_t p) { return {values_.data() + p * depth_, std::size_t(depth_)}; }
  std::span<const T> pixel(std::size_t p) const {
    return {values_.data() + p * depth_, std::size_t(depth_)};
  }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  bool same_shape(const Grid3& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && depth_ == other.depth_;
  }

  friend bool operator==(const Grid3&, const Grid3&) = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int height_ = 0;
  int width_ = 0;
  int depth_ = 0;
  std::vector<T> values_;
};

struct FeatureTag {};
struct ScoreTag {};
struct LogitTag {};
struct GradientTag {};

/// Per-pixel input features (any channel count).
using FeatureGrid = Grid3<float, FeatureTag>;
/// Per-pixel class scores in [0,1]; depth is the class count.
using ScoreGrid = Grid3<double, ScoreTag>;
using LogitGrid = Grid3<double, LogitTag>;
/// Loss gradient with respect to a ScoreGrid (or LogitGrid) of the same shape.
using GradientGrid = Grid3<double, GradientTag>;

class LabelGrid {
 public:
  LabelGrid() = default;
  LabelGrid(int height, int width, std::uint16_t fill = 0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept { return values_.size(); }

  std::uint16_t& at(std::size_t pixel) { return values_[pixel]; }
  std::uint16_t at(std::size_t pixel) const { return values_[pixel]; }
  std::uint16_t& at(int row, int col) { return values_[std::size_t(row) * width_ + col]; }
  std::uint16_t at(int row, int col) const { return values_[std::size_t(row) * width_ + col]; }

  std::span<std::uint16_t> values() noexcept { return values_; }
  std::span<const std::uint16_t> values() const noexcept { return values_; }

  /// Throws ValidationError if any non-ignored label is >= num_classes.
  void check_classes(int num_classes) const;

  friend bool operator==(const LabelGrid&, const LabelGrid&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint16_t> values_;
};

struct Sample {
  FeatureGrid features;
  LabelGrid labels;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Mini-batch of equally sized samples.
struct Batch {
  std::vector<Sample> items;

  std::size_t size() const noexcept { return items.size(); }
  /// Non-empty, every item the same height/width/channels, labels matching.
  void validate() const;
  std::vector<LabelGrid> labels() const;

  friend bool operator==(const Batch&, const Batch&) = default;
};

/// A whole dataset together with the geometry it was declared with, which
/// is kept even when there are no images.
struct LabeledDataset {
  int num_classes = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<Sample> samples;

  void validate() const;
  std::vector<LabelGrid> labels() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Per-class pixel tallies plus the per-image breakdown they were summed
/// from. Ignored pixels are counted separately and nowhere else.
struct ClassStats {
  int num_classes = 0;
  std::vector<std::int64_t> count;
  std::vector<std::vector<std::int64_t>> per_image;
  std::int64_t ignored = 0;
  std::int64_t total_pixels = 0;

  std::size_t image_count() const noexcept { return per_image.size(); }
  bool present(std::size_t image, int c) const { return per_image[image][c] > 0; }
};

ClassStats class_stats(std::span<const LabelGrid> dataset, int num_classes);

/// Loss value plus d(loss)/d(score) for every item of the batch.
struct LossReport {
  double loss = 0.0;
  std::vector<GradientGrid> gradient;
};

}  // namespace aucseg
