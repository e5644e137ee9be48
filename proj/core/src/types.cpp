#include "aucseg/types.hpp"

#include <cmath>
#include <string>

namespace aucseg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

LabelGrid::LabelGrid(int height, int width, std::uint16_t fill)
    : height_(height), width_(width) {
  if (height < 1 || width < 1) throw ValidationError("grid dimensions must be positive");
  values_.assign(static_cast<std::size_t>(height) * width, fill);
}

void LabelGrid::check_classes(int num_classes) const {
  for (std::uint16_t v : values_) {
    if (v != kIgnoreLabel && v >= num_classes) {
      throw ValidationError("label " + std::to_string(v) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
  }
}

void Batch::validate() const {
  if (items.empty()) throw ValidationError("empty batch");
  const FeatureGrid& first = items.front().features;
  for (const Sample& s : items) {
    if (!s.features.same_shape(first)) throw ValidationError("batch items differ in shape");
    if (s.labels.height() != first.height() || s.labels.width() != first.width()) {
      throw ValidationError("label grid does not match feature grid");
    }
  }
}

std::vector<LabelGrid> Batch::labels() const {
  std::vector<LabelGrid> out;
  out.reserve(items.size());
  for (const Sample& s : items) out.push_back(s.labels);
  return out;
}

void LabeledDataset::validate() const {
  if (num_classes < 1 || height < 1 || width < 1 || channels < 1) {
    throw ValidationError("dataset geometry must be positive");
  }
  for (const Sample& s : samples) {
    if (s.features.height() != height || s.features.width() != width ||
        s.features.depth() != channels || s.labels.height() != height ||
        s.labels.width() != width) {
      throw ValidationError("sample shape does not match dataset geometry");
    }
    for (float v : s.features.values()) {
      if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
    }
    s.labels.check_classes(num_classes);
  }
}

std::vector<LabelGrid> LabeledDataset::labels() const {
  std::vector<LabelGrid> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(s.labels);
  return out;
}

ClassStats class_stats(std::span<const LabelGrid> dataset, int num_classes) {
  if (dataset.empty()) throw ValidationError("empty dataset");
  if (num_classes < 1) throw ValidationError("class count must be positive");

  ClassStats stats;
  stats.num_classes = num_classes;
  stats.count.assign(num_classes, 0);
  stats.per_image.reserve(dataset.size());
  for (const LabelGrid& grid : dataset) {
    std::vector<std::int64_t> row(num_classes, 0);
    for (std::uint16_t v : grid.values()) {
      if (v == kIgnoreLabel) {
        ++stats.ignored;
      } else if (v >= num_classes) {
        throw ValidationError("label " + std::to_string(v) + " outside class range");
      } else {
        ++row[v];
      }
    }
    for (int c = 0; c < num_classes; ++c) stats.count[c] += row[c];
    stats.total_pixels += static_cast<std::int64_t>(grid.pixel_count());
    stats.per_image.push_back(std::move(row));
  }
  return stats;
}

}  // namespace aucseg
