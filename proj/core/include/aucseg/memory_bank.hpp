#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "aucseg/rng.hpp"
#include "aucseg/types.hpp"

namespace aucseg {

/// Eviction rule once a class store holds memory_size patches.
///   kRandom        uniform victim
///   kFifo          oldest stored patch
///   kLifo          newest stored patch
///   kPriorityUsed  uniform among patches already retrieved, else uniform
enum class ReplacementStrategy { kRandom, kFifo, kLifo, kPriorityUsed };

std::string_view to_string(ReplacementStrategy strategy);
ReplacementStrategy parse_replacement_strategy(std::string_view name);

struct BankConfig {
  int memory_size = 5;
  double sample_ratio = 0.05;
  double resize_ratio = 0.4;
  ReplacementStrategy strategy = ReplacementStrategy::kRandom;
  /// Share of all classes treated as tail, picked by ascending pixel count.
  double tail_fraction = 0.35;

  void validate() const;

  friend bool operator==(const BankConfig&, const BankConfig&) = default;
};

/// Pixels of one class from one image, cropped to their tight bounding box.
/// `mask` is row-major over the box and marks the class pixels.
struct MaskedPatch {
  int class_id = 0;
  FeatureGrid features;
  std::vector<std::uint8_t> mask;

  int height() const noexcept { return features.height(); }
  int width() const noexcept { return features.width(); }

  friend bool operator==(const MaskedPatch&, const MaskedPatch&) = default;
};

bool has_class(const LabelGrid& labels, int class_id);
/// Pixels of `class_id` in `sample`; throws ValidationError if there are none.
MaskedPatch extract_patch(const Sample& sample, int class_id);

/// Nearest-neighbour resampling of features and mask to height x width.
/// If no mask cell survives, the cell nearest the first masked source cell
/// is set so the result is never empty.
MaskedPatch resize_patch(const MaskedPatch& patch, int height, int width);

/// The `round(tail_fraction * K)` classes with the smallest non-zero pixel
/// counts, ordered by count then class index.
std::vector<int> select_tail_classes(const ClassStats& stats, double tail_fraction);

/// Tail classes without a single pixel anywhere in the batch.
std::vector<int> missing_tail_classes(const Batch& batch, std::span<const int> tail_classes);

/// Number of classes the retrieve step attempts: min(ceil(missing * ratio), missing).
std::size_t sample_count(std::size_t missing, double sample_ratio);

struct PasteRecord {
  int class_id = 0;
  std::size_t image = 0;
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const PasteRecord&, const PasteRecord&) = default;
};

struct PasteResult {
  Batch batch;
  std::vector<PasteRecord> log;
  /// Per item, 1 where a bank pixel overwrote the original.
  std::vector<std::vector<std::uint8_t>> pasted;
  /// Classes drawn from the missing set, pasted or not.
  std::size_t attempts = 0;
};

class TailMemoryBank {
 public:
  struct Entry {
    MaskedPatch patch;
    bool used = false;
    std::uint64_t sequence = 0;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  TailMemoryBank(std::vector<int> tail_classes, BankConfig config);

  const std::vector<int>& tail_classes() const noexcept { return tail_classes_; }
  const BankConfig& config() const noexcept { return config_; }

  /// Entries for `class_id` in insertion order; empty for non-tail classes.
  std::span<const Entry> entries(int class_id) const;
  std::size_t size(int class_id) const { return entries(class_id).size(); }
  bool empty() const;

  /// Store branch: one patch per (image, present tail class), evicting per
  /// the configured strategy when the class store is full.
  void store(const Batch& batch, Rng& rng);

  /// Retrieve branch: supplements missing tail classes by pasting resized
  /// stored patches at random positions. The input batch is not modified.
  PasteResult retrieve_and_paste(const Batch& batch, Rng& rng);

  friend bool operator==(const TailMemoryBank&, const TailMemoryBank&) = default;

 private:
  int slot_of(int class_id) const;
  void insert(std::vector<Entry>& slot, MaskedPatch patch, Rng& rng);

  std::vector<int> tail_classes_;
  BankConfig config_;
  std::vector<std::vector<Entry>> slots_;
  std::uint64_t next_sequence_ = 0;
};

/// Lays every stored patch out as one image of a dataset sized to the
/// largest patch: features zero-padded, labels IGNORE outside the mask.
LabeledDataset bank_to_dataset(const TailMemoryBank& bank, int num_classes);

}  // namespace aucseg
