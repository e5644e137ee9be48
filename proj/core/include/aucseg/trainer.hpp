#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "aucseg/diagnostics.hpp"
#include "aucseg/memory_bank.hpp"
#include "aucseg/rng.hpp"
#include "aucseg/surrogate_losses.hpp"
#include "aucseg/types.hpp"

namespace aucseg {

/// Per-pixel affine map followed by softmax:
///   logit_k = bias_k + sum_ch x_ch * W[ch][k]
struct PixelModel {
  int channels = 0;
  int num_classes = 0;
  std::vector<double> weights;  // row-major [channel][class]
  std::vector<double> bias;

  PixelModel() = default;
  PixelModel(int channels, int num_classes);

  double& weight(int ch, int k) { return weights[std::size_t(ch) * num_classes + k]; }
  double weight(int ch, int k) const { return weights[std::size_t(ch) * num_classes + k]; }

  friend bool operator==(const PixelModel&, const PixelModel&) = default;
};

struct TrainConfig {
  int batch_size = 4;
  int max_iter = 2000;
  double base_lr = 0.05;
  int warmup_iters = 100;
  double lr_floor = 1e-6;
  /// Weight of the CE term next to the AUC term.
  double lambda = kDefaultCeWeight;
  /// false trains on plain cross-entropy (weight 1) and ignores `lambda`.
  bool use_auc = true;
  SurrogateKind surrogate = SurrogateKind::kSquare;
  AucMode mode = AucMode::kOneVsOne;
  PairNormalization pair_norm = PairNormalization::kUnionCounts;
  bool use_bank = true;
  BankConfig bank;
  int eval_every = 200;
  /// Per-class pixel cap for the loss (seeded uniform subsample); 0 = off.
  int max_pixels_per_class = 0;
  /// Share of the classes with pixels reported as the head group.
  double head_fraction = 0.25;
  /// Share of images held out for evaluation.
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Linear warmup from lr_floor to base_lr over warmup_iters, then
/// base_lr * (1 - iter / max_iter).
double learning_rate(const TrainConfig& config, int iter);

std::vector<ScoreGrid> forward(const PixelModel& model, const Batch& batch);

struct ParamGradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct Objective {
  double loss_auc = 0.0;
  double loss_ce = 0.0;
  double total = 0.0;
  ParamGradient grad;
};

/// Loss of `batch` under `model` and its gradient with respect to the
/// parameters. The AUC term only counts classes present in the batch and is
/// zero when fewer than two are. `pasted` may be null.
Objective evaluate_objective(const PixelModel& model, const Batch& batch,
                             const TrainConfig& config, const PastedPixels* pasted = nullptr,
                             Rng* subsample_rng = nullptr);

struct StepLog {
  int iter = 0;
  double lr = 0.0;
  double loss_auc = 0.0;
  double loss_ce = 0.0;
  double loss_total = 0.0;
  std::size_t missing = 0;
  std::size_t pastes = 0;

  friend bool operator==(const StepLog&, const StepLog&) = default;
};

/// One iteration: missing tail classes, store branch, retrieve branch,
/// forward, combined loss, backward, gradient step. `bank` may be null to
/// train without augmentation. Throws NumericalError on a non-finite loss.
StepLog train_step(PixelModel& model, TailMemoryBank* bank, const Batch& batch,
                   const TrainConfig& config, int iter, Rng& rng);

/// Evaluation of `model` on `samples`: IoU groups and the OvO AUC metric.
MetricReport evaluate(const PixelModel& model, std::span<const Sample> samples,
                      const Partition& partition, int num_classes);

struct EvalRecord {
  int iter = 0;
  double loss_auc = 0.0;
  double loss_ce = 0.0;
  MetricReport metrics;
};

struct TrainResult {
  PixelModel model;
  std::vector<EvalRecord> history;
  std::vector<StepLog> steps;
  std::vector<int> tail_classes;
  Partition partition;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> eval_indices;
  /// Final bank state; empty when training without the bank.
  std::optional<TailMemoryBank> bank;
};

/// Head / middle / tail split of the classes with pixels: the tail is
/// select_tail_classes(stats, tail_fraction), the head the round(head_fraction
/// * nonzero) largest classes (at least one), the middle whatever is left.
Partition group_classes(const ClassStats& stats, double head_fraction, double tail_fraction);

/// Full loop: seeded 80/20 split, per-epoch reshuffled batches, evaluation
/// every eval_every steps and after the last one.
TrainResult train(const LabeledDataset& dataset, const TrainConfig& config);

void write_metrics_csv(std::ostream& out, std::span<const EvalRecord> history);

/// SEGM model file: "SEGM" | u32 version = 1 | u32 channels | u32 K
/// | f32 weights [channel][class] | f32 bias, little-endian.
inline constexpr std::uint32_t kSegmVersion = 1;
std::vector<std::byte> encode_segm(const PixelModel& model);
PixelModel decode_segm(std::span<const std::byte> bytes);
void write_segm(const std::filesystem::path& path, const PixelModel& model);
PixelModel read_segm(const std::filesystem::path& path);

}  // namespace aucseg
