#include "aucseg/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aucseg {

std::string_view to_string(ReplacementStrategy strategy) {
  switch (strategy) {
    case ReplacementStrategy::kRandom: return "random";
    case ReplacementStrategy::kFifo: return "fifo";
    case ReplacementStrategy::kLifo: return "lifo";
    case ReplacementStrategy::kPriorityUsed: return "pu";
  }
  return "unknown";
}

ReplacementStrategy parse_replacement_strategy(std::string_view name) {
  if (name == "random") return ReplacementStrategy::kRandom;
  if (name == "fifo") return ReplacementStrategy::kFifo;
  if (name == "lifo") return ReplacementStrategy::kLifo;
  if (name == "pu") return ReplacementStrategy::kPriorityUsed;
  throw ValidationError("unknown bank strategy '" + std::string(name) + "'");
}

void BankConfig::validate() const {
  if (memory_size < 1) throw ValidationError("memory size must be at least 1");
  if (!(sample_ratio > 0.0 && sample_ratio <= 1.0)) {
    throw ValidationError("sample ratio must lie in (0, 1]");
  }
  if (!(resize_ratio > 0.0 && resize_ratio <= 1.0)) {
    throw ValidationError("resize ratio must lie in (0, 1]");
  }
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw ValidationError("tail fraction must lie in (0, 1)");
  }
}

bool has_class(const LabelGrid& labels, int class_id) {
  const auto v = labels.values();
  return std::find(v.begin(), v.end(), static_cast<std::uint16_t>(class_id)) != v.end();
}

MaskedPatch extract_patch(const Sample& sample, int class_id) {
  const LabelGrid& labels = sample.labels;
  int top = labels.height(), left = labels.width(), bottom = -1, right = -1;
  for (int r = 0; r < labels.height(); ++r) {
    for (int c = 0; c < labels.width(); ++c) {
      if (labels.at(r, c) == class_id) {
        top = std::min(top, r);
        bottom = std::max(bottom, r);
        left = std::min(left, c);
        right = std::max(right, c);
      }
    }
  }
  if (bottom < 0) {
    throw ValidationError("class " + std::to_string(class_id) + " not present in sample");
  }

  const int h = bottom - top + 1;
  const int w = right - left + 1;
  const int channels = sample.features.depth();
  MaskedPatch patch{class_id, FeatureGrid(h, w, channels),
                    std::vector<std::uint8_t>(std::size_t(h) * w, 0)};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        patch.features.at(r, c, ch) = sample.features.at(top + r, left + c, ch);
      }
      patch.mask[std::size_t(r) * w + c] = labels.at(top + r, left + c) == class_id;
    }
  }
  return patch;
}

MaskedPatch resize_patch(const MaskedPatch& patch, int height, int width) {
  if (height < 1 || width < 1) throw ValidationError("resize target must be positive");
  const int src_h = patch.height();
  const int src_w = patch.width();
  const int channels = patch.features.depth();
  auto src_row = [&](int r) { return std::min(src_h - 1, int((r + 0.5) * src_h / height)); };
  auto src_col = [&](int c) { return std::min(src_w - 1, int((c + 0.5) * src_w / width)); };

  MaskedPatch out{patch.class_id, FeatureGrid(height, width, channels),
                  std::vector<std::uint8_t>(std::size_t(height) * width, 0)};
  bool any = false;
  for (int r = 0; r < height; ++r) {
    const int sr = src_row(r);
    for (int c = 0; c < width; ++c) {
      const int sc = src_col(c);
      for (int ch = 0; ch < channels; ++ch) out.features.at(r, c, ch) = patch.features.at(sr, sc, ch);
      const std::uint8_t m = patch.mask[std::size_t(sr) * src_w + sc];
      out.mask[std::size_t(r) * width + c] = m;
      any = any || m != 0;
    }
  }
  if (!any) {
    const auto it = std::find(patch.mask.begin(), patch.mask.end(), std::uint8_t{1});
    if (it == patch.mask.end()) throw ValidationError("patch mask is empty");
    const auto flat = static_cast<std::size_t>(it - patch.mask.begin());
    const int r = std::min(height - 1, int(flat / src_w) * height / src_h);
    const int c = std::min(width - 1, int(flat % src_w) * width / src_w);
    out.mask[std::size_t(r) * width + c] = 1;
    for (int ch = 0; ch < channels; ++ch) {
      out.features.at(r, c, ch) = patch.features.at(int(flat / src_w), int(flat % src_w), ch);
    }
  }
  return out;
}

std::vector<int> select_tail_classes(const ClassStats& stats, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw ValidationError("tail fraction must lie in (0, 1)");
  }
  std::vector<int> nonzero;
  for (int c = 0; c < stats.num_classes; ++c) {
    if (stats.count[c] > 0) nonzero.push_back(c);
  }
  if (nonzero.size() < 2) throw ValidationError("need at least two classes with pixels");

  // Round half up; the epsilon absorbs products such as 0.35 * 10 landing
  // just under the half.
  const auto wanted = static_cast<std::size_t>(
      std::floor(tail_fraction * stats.num_classes + 0.5 + 1e-9));
  if (wanted == 0) throw ValidationError("tail fraction selects no classes");

  std::stable_sort(nonzero.begin(), nonzero.end(),
                   [&](int a, int b) { return stats.count[a] < stats.count[b]; });
  nonzero.resize(std::min(wanted, nonzero.size()));
  return nonzero;
}

std::vector<int> missing_tail_classes(const Batch& batch, std::span<const int> tail_classes) {
  std::vector<int> missing;
  for (int c : tail_classes) {
    const bool seen = std::any_of(batch.items.begin(), batch.items.end(),
                                  [c](const Sample& s) { return has_class(s.labels, c); });
    if (!seen) missing.push_back(c);
  }
  return missing;
}

std::size_t sample_count(std::size_t missing, double sample_ratio) {
  if (missing == 0) return 0;
  const double raw = static_cast<double>(missing) * sample_ratio;
  const auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(n, 1, missing);
}

TailMemoryBank::TailMemoryBank(std::vector<int> tail_classes, BankConfig config)
    : tail_classes_(std::move(tail_classes)), config_(config) {
  config_.validate();
  for (std::size_t i = 0; i < tail_classes_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (tail_classes_[i] == tail_classes_[j]) throw ValidationError("duplicate tail class");
    }
  }
  slots_.resize(tail_classes_.size());
}

int TailMemoryBank::slot_of(int class_id) const {
  const auto it = std::find(tail_classes_.begin(), tail_classes_.end(), class_id);
  return it == tail_classes_.end() ? -1 : int(it - tail_classes_.begin());
}

std::span<const TailMemoryBank::Entry> TailMemoryBank::entries(int class_id) const {
  const int slot = slot_of(class_id);
  if (slot < 0) return {};
  return slots_[slot];
}

bool TailMemoryBank::empty() const {
  return std::all_of(slots_.begin(), slots_.end(), [](const auto& s) { return s.empty(); });
}

void TailMemoryBank::insert(std::vector<Entry>& slot, MaskedPatch patch, Rng& rng) {
  Entry entry{std::move(patch), false, next_sequence_++};
  if (slot.size() < std::size_t(config_.memory_size)) {
    slot.push_back(std::move(entry));
    return;
  }
  std::size_t victim = 0;
  switch (config_.strategy) {
    case ReplacementStrategy::kRandom:
      victim = rng.below(slot.size());
      break;
    case ReplacementStrategy::kFifo:
      victim = 0;
      break;
    case ReplacementStrategy::kLifo:
      victim = slot.size() - 1;
      break;
    case ReplacementStrategy::kPriorityUsed: {
      std::vector<std::size_t> used;
      for (std::size_t i = 0; i < slot.size(); ++i) {
        if (slot[i].used) used.push_back(i);
      }
      victim = used.empty() ? rng.below(slot.size()) : used[rng.below(used.size())];
      break;
    }
  }
  // Slots stay in insertion order, so FIFO/LIFO victims are the ends.
  slot.erase(slot.begin() + std::ptrdiff_t(victim));
  slot.push_back(std::move(entry));
}

void TailMemoryBank::store(const Batch& batch, Rng& rng) {
  for (std::size_t slot = 0; slot < tail_classes_.size(); ++slot) {
    const int c = tail_classes_[slot];
    for (const Sample& sample : batch.items) {
      if (has_class(sample.labels, c)) insert(slots_[slot], extract_patch(sample, c), rng);
    }
  }
}

PasteResult TailMemoryBank::retrieve_and_paste(const Batch& batch, Rng& rng) {
  PasteResult result;
  result.batch = batch;
  result.pasted.reserve(batch.size());
  for (const Sample& s : batch.items) result.pasted.emplace_back(s.labels.pixel_count(), 0);

  std::vector<int> remaining = missing_tail_classes(batch, tail_classes_);
  if (remaining.empty() || empty() || batch.items.empty()) return result;

  result.attempts = sample_count(remaining.size(), config_.sample_ratio);
  const int image_h = batch.items.front().labels.height();
  const int image_w = batch.items.front().labels.width();

  for (std::size_t i = 0; i < result.attempts; ++i) {
    const std::size_t pick = rng.below(remaining.size());
    const int c = remaining[pick];
    remaining.erase(remaining.begin() + std::ptrdiff_t(pick));

    auto& slot = slots_[slot_of(c)];
    if (slot.empty()) continue;
    Entry& entry = slot[rng.below(slot.size())];
    entry.used = true;

    const MaskedPatch& src = entry.patch;
    const double scale = std::min({config_.resize_ratio, double(image_h) / src.height(),
                                   double(image_w) / src.width()});
    const int h = std::clamp(int(std::lround(src.height() * scale)), 1, image_h);
    const int w = std::clamp(int(std::lround(src.width() * scale)), 1, image_w);
    const MaskedPatch scaled = resize_patch(src, h, w);

    const std::size_t image = rng.below(batch.size());
    const int top = int(rng.below(std::uint64_t(image_h - h + 1)));
    const int left = int(rng.below(std::uint64_t(image_w - w + 1)));

    Sample& target = result.batch.items[image];
    const int channels = std::min(target.features.depth(), scaled.features.depth());
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < w; ++col) {
        if (scaled.mask[std::size_t(r) * w + col] == 0) continue;
        for (int ch = 0; ch < channels; ++ch) {
          target.features.at(top + r, left + col, ch) = scaled.features.at(r, col, ch);
        }
        target.labels.at(top + r, left + col) = static_cast<std::uint16_t>(c);
        result.pasted[image][std::size_t(top + r) * image_w + left + col] = 1;
      }
    }
    result.log.push_back({c, image, top, left, h, w});
  }
  return result;
}

LabeledDataset bank_to_dataset(const TailMemoryBank& bank, int num_classes) {
  LabeledDataset out;
  out.num_classes = num_classes;
  out.height = out.width = out.channels = 1;
  for (int c : bank.tail_classes()) {
    for (const auto& e : bank.entries(c)) {
      out.height = std::max(out.height, e.patch.height());
      out.width = std::max(out.width, e.patch.width());
      out.channels = std::max(out.channels, e.patch.features.depth());
    }
  }
  for (int c : bank.tail_classes()) {
    for (const auto& e : bank.entries(c)) {
      Sample s{FeatureGrid(out.height, out.width, out.channels, 0.0f),
               LabelGrid(out.height, out.width, kIgnoreLabel)};
      for (int r = 0; r < e.patch.height(); ++r) {
        for (int col = 0; col < e.patch.width(); ++col) {
          for (int ch = 0; ch < e.patch.features.depth(); ++ch) {
            s.features.at(r, col, ch) = e.patch.features.at(r, col, ch);
          }
          if (e.patch.mask[std::size_t(r) * e.patch.width() + col] != 0) {
            s.labels.at(r, col) = static_cast<std::uint16_t>(c);
          }
        }
      }
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace aucseg
