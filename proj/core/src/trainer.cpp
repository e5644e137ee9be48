#include "aucseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "aucseg/segd_io.hpp"

namespace aucseg {

namespace {

// Stream ids for Rng::derived.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kSamplerStream = 2;
constexpr std::uint64_t kStepStream = 3;

std::size_t present_class_count(std::span<const LabelGrid> labels, int num_classes) {
  std::vector<bool> seen(num_classes, false);
  for (const LabelGrid& l : labels) {
    for (std::uint16_t v : l.values()) {
      if (v != kIgnoreLabel) seen[v] = true;
    }
  }
  return std::size_t(std::count(seen.begin(), seen.end(), true));
}

// Keeps at most `cap` pixels of each class (uniform, seeded); the rest are
// relabelled as ignored for the loss only.
void subsample_labels(std::vector<LabelGrid>& labels, int num_classes, int cap, Rng& rng) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> members(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto v = labels[i].values();
    for (std::size_t p = 0; p < v.size(); ++p) {
      if (v[p] != kIgnoreLabel) members[v[p]].push_back({i, p});
    }
  }
  for (auto& list : members) {
    if (list.size() <= std::size_t(cap)) continue;
    // Partial Fisher-Yates: the first `cap` entries become the kept sample.
    for (std::size_t j = 0; j < std::size_t(cap); ++j) {
      std::swap(list[j], list[j + rng.below(list.size() - j)]);
    }
    for (std::size_t j = std::size_t(cap); j < list.size(); ++j) {
      labels[list[j].first].at(list[j].second) = kIgnoreLabel;
    }
  }
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

PixelModel::PixelModel(int channels_, int num_classes_)
    : channels(channels_), num_classes(num_classes_) {
  if (channels < 1 || num_classes < 2) throw ValidationError("model needs >= 1 channel and >= 2 classes");
  weights.assign(std::size_t(channels) * num_classes, 0.0);
  bias.assign(num_classes, 0.0);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw ValidationError("base_lr must be > 0");
  if (warmup_iters < 0) throw ValidationError("warmup_iters must be >= 0");
  if (!(lr_floor >= 0.0)) throw ValidationError("lr_floor must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be >= 0");
  if (eval_every < 1) throw ValidationError("eval_every must be >= 1");
  if (max_pixels_per_class < 0) throw ValidationError("max_pixels_per_class must be >= 0");
  if (!(head_fraction > 0.0 && head_fraction < 1.0)) {
    throw ValidationError("head_fraction must lie in (0, 1)");
  }
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ValidationError("holdout_fraction must lie in (0, 1)");
  }
  bank.validate();
}

double learning_rate(const TrainConfig& config, int iter) {
  if (iter < config.warmup_iters) {
    const double t = double(iter) / double(config.warmup_iters);
    return config.lr_floor + (config.base_lr - config.lr_floor) * t;
  }
  return config.base_lr * (1.0 - double(iter) / double(config.max_iter));
}

std::vector<ScoreGrid> forward(const PixelModel& model, const Batch& batch) {
  std::vector<ScoreGrid> out;
  out.reserve(batch.size());
  const int k = model.num_classes;
  for (const Sample& s : batch.items) {
    if (s.features.depth() != model.channels) {
      throw ValidationError("feature channels do not match the model");
    }
    LogitGrid logits(s.features.height(), s.features.width(), k);
    for (std::size_t p = 0; p < s.features.pixel_count(); ++p) {
      auto z = logits.pixel(p);
      std::copy(model.bias.begin(), model.bias.end(), z.begin());
      const auto x = s.features.pixel(p);
      for (int ch = 0; ch < model.channels; ++ch) {
        const double xc = x[ch];
        const double* row = model.weights.data() + std::size_t(ch) * k;
        for (int c = 0; c < k; ++c) z[c] += xc * row[c];
      }
    }
    out.push_back(softmax_head(logits));
  }
  return out;
}

Objective evaluate_objective(const PixelModel& model, const Batch& batch,
                             const TrainConfig& config, const PastedPixels* pasted,
                             Rng* subsample_rng) {
  const std::vector<ScoreGrid> scores = forward(model, batch);
  std::vector<LabelGrid> labels = batch.labels();
  if (config.max_pixels_per_class > 0) {
    if (subsample_rng == nullptr) throw ValidationError("pixel subsampling needs an rng");
    subsample_labels(labels, model.num_classes, config.max_pixels_per_class, *subsample_rng);
  }

  Objective obj;
  LossReport loss;
  const bool auc_defined = present_class_count(labels, model.num_classes) >= 2;
  if (config.use_auc && auc_defined) {
    loss = combined_loss(scores, labels, config.surrogate, config.mode, 0.0, pasted);
    obj.loss_auc = loss.loss;
  }
  const double ce_weight = config.use_auc ? config.lambda : 1.0;
  if (ce_weight > 0.0 || loss.gradient.empty()) {
    LossReport ce = ce_loss(scores, labels);
    obj.loss_ce = ce.loss;
    if (loss.gradient.empty()) {
      for (auto& g : ce.gradient) {
        for (double& v : g.values()) v *= ce_weight;
      }
      loss.gradient = std::move(ce.gradient);
    } else {
      for (std::size_t i = 0; i < loss.gradient.size(); ++i) {
        auto dst = loss.gradient[i].values();
        const auto src = ce.gradient[i].values();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += ce_weight * src[j];
      }
    }
  }
  obj.total = obj.loss_auc + ce_weight * obj.loss_ce;

  const int k = model.num_classes;
  obj.grad.weights.assign(model.weights.size(), 0.0);
  obj.grad.bias.assign(model.bias.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const GradientGrid dz = softmax_backward(scores[i], loss.gradient[i]);
    const FeatureGrid& x = batch.items[i].features;
    for (std::size_t p = 0; p < x.pixel_count(); ++p) {
      const auto g = dz.pixel(p);
      const auto xp = x.pixel(p);
      for (int c = 0; c < k; ++c) obj.grad.bias[c] += g[c];
      for (int ch = 0; ch < model.channels; ++ch) {
        double* row = obj.grad.weights.data() + std::size_t(ch) * k;
        const double xc = xp[ch];
        for (int c = 0; c < k; ++c) row[c] += xc * g[c];
      }
    }
  }
  return obj;
}

StepLog train_step(PixelModel& model, TailMemoryBank* bank, const Batch& batch,
                   const TrainConfig& config, int iter, Rng& rng) {
  batch.validate();
  StepLog log;
  log.iter = iter;
  log.lr = learning_rate(config, iter);

  auto state_dump = [&](const Objective& obj) {
    std::ostringstream dump;
    dump << "iter " << iter << " (lr " << log.lr << ", auc " << obj.loss_auc << ", ce "
         << obj.loss_ce << ", max|W| " << max_abs(model.weights) << ", max|b| "
         << max_abs(model.bias) << ", missing " << log.missing << ", pastes " << log.pastes
         << ")";
    return dump.str();
  };

  Objective obj;
  try {
    if (bank != nullptr) {
      log.missing = missing_tail_classes(batch, bank->tail_classes()).size();
      bank->store(batch, rng);
      PasteResult augmented = bank->retrieve_and_paste(batch, rng);
      log.pastes = augmented.log.size();
      const PastedPixels pasted{augmented.pasted, config.pair_norm};
      obj = evaluate_objective(model, augmented.batch, config, &pasted, &rng);
    } else {
      obj = evaluate_objective(model, batch, config, nullptr, &rng);
    }
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " at " + state_dump(obj));
  }
  log.loss_auc = obj.loss_auc;
  log.loss_ce = obj.loss_ce;
  log.loss_total = obj.total;
  if (!std::isfinite(obj.total)) throw NumericalError("non-finite loss at " + state_dump(obj));

  for (std::size_t j = 0; j < model.weights.size(); ++j) model.weights[j] -= log.lr * obj.grad.weights[j];
  for (std::size_t j = 0; j < model.bias.size(); ++j) model.bias[j] -= log.lr * obj.grad.bias[j];
  return log;
}

MetricReport evaluate(const PixelModel& model, std::span<const Sample> samples,
                      const Partition& partition, int num_classes) {
  Batch batch{{samples.begin(), samples.end()}};
  const std::vector<ScoreGrid> scores = forward(model, batch);
  std::vector<LabelGrid> truth = batch.labels();
  std::vector<LabelGrid> predicted;
  predicted.reserve(scores.size());
  for (const ScoreGrid& s : scores) predicted.push_back(argmax_labels(s));
  MetricReport report = iou_report(predicted, truth, partition, num_classes);
  if (present_class_count(truth, num_classes) >= 2) report.ovo_auc = ovo_auc_metric(scores, truth);
  return report;
}

Partition group_classes(const ClassStats& stats, double head_fraction, double tail_fraction) {
  if (!(head_fraction > 0.0 && head_fraction < 1.0)) {
    throw ValidationError("head fraction must lie in (0, 1)");
  }
  int nonzero = 0;
  for (auto c : stats.count) nonzero += c > 0;
  const int tail_count = int(select_tail_classes(stats, tail_fraction).size());
  int head_count = std::max(1, int(std::lround(head_fraction * double(nonzero))));
  head_count = std::min(head_count, nonzero - tail_count);
  if (head_count < 1) throw ValidationError("tail fraction leaves no head classes");
  return make_partition(stats, head_count, nonzero - head_count - tail_count);
}

TrainResult train(const LabeledDataset& dataset, const TrainConfig& config) {
  dataset.validate();
  config.validate();
  const std::size_t n = dataset.samples.size();
  if (n < 2) throw ValidationError("need at least two images to split train/eval");

  TrainResult result;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = Rng::derived(config.seed, kSplitStream);
  shuffle(std::span(order), split_rng);
  const auto n_eval = std::clamp<std::size_t>(
      std::size_t(std::lround(double(n) * config.holdout_fraction)), 1, n - 1);
  result.eval_indices.assign(order.begin(), order.begin() + std::ptrdiff_t(n_eval));
  result.train_indices.assign(order.begin() + std::ptrdiff_t(n_eval), order.end());
  if (std::size_t(config.batch_size) > result.train_indices.size()) {
    throw ValidationError("batch size exceeds the training split");
  }

  std::vector<LabelGrid> train_labels;
  for (std::size_t i : result.train_indices) train_labels.push_back(dataset.samples[i].labels);
  const ClassStats stats = class_stats(train_labels, dataset.num_classes);

  result.partition = group_classes(stats, config.head_fraction, config.bank.tail_fraction);
  result.tail_classes = select_tail_classes(stats, config.bank.tail_fraction);

  std::vector<Sample> eval_samples;
  for (std::size_t i : result.eval_indices) eval_samples.push_back(dataset.samples[i]);

  result.model = PixelModel(dataset.channels, dataset.num_classes);
  std::optional<TailMemoryBank>& bank = result.bank;
  if (config.use_bank) bank.emplace(result.tail_classes, config.bank);

  Rng sampler = Rng::derived(config.seed, kSamplerStream);
  Rng step_rng = Rng::derived(config.seed, kStepStream);
  std::vector<std::size_t> epoch = result.train_indices;
  std::size_t cursor = epoch.size();
  result.steps.reserve(std::size_t(config.max_iter));

  for (int iter = 0; iter < config.max_iter; ++iter) {
    if (cursor + std::size_t(config.batch_size) > epoch.size()) {
      shuffle(std::span(epoch), sampler);
      cursor = 0;
    }
    Batch batch;
    batch.items.reserve(std::size_t(config.batch_size));
    for (int b = 0; b < config.batch_size; ++b) batch.items.push_back(dataset.samples[epoch[cursor++]]);

    const StepLog log =
        train_step(result.model, bank ? &*bank : nullptr, batch, config, iter, step_rng);
    result.steps.push_back(log);

    if ((iter + 1) % config.eval_every == 0 || iter + 1 == config.max_iter) {
      result.history.push_back({iter + 1, log.loss_auc, log.loss_ce,
                                evaluate(result.model, eval_samples, result.partition,
                                         dataset.num_classes)});
    }
  }
  return result;
}

void write_metrics_csv(std::ostream& out, std::span<const EvalRecord> history) {
  out << "iter,loss_auc,loss_ce,overall_miou,head_miou,middle_miou,tail_miou,ovo_auc\n";
  for (const EvalRecord& r : history) {
    out << r.iter << ',' << format_value(r.loss_auc) << ',' << format_value(r.loss_ce) << ','
        << format_value(r.metrics.overall_miou) << ',' << format_value(r.metrics.head_miou)
        << ',' << format_value(r.metrics.middle_miou) << ','
        << format_value(r.metrics.tail_miou) << ',' << format_value(r.metrics.ovo_auc) << '\n';
  }
}

std::vector<std::byte> encode_segm(const PixelModel& model) {
  ByteWriter w;
  w.bytes(std::as_bytes(std::span("SEGM", 4)));
  w.u32(kSegmVersion);
  w.u32(std::uint32_t(model.channels));
  w.u32(std::uint32_t(model.num_classes));
  for (double v : model.weights) w.f32(float(v));
  for (double v : model.bias) w.f32(float(v));
  return std::move(w).take();
}

PixelModel decode_segm(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  r.expect_magic("SEGM");
  const std::size_t version_at = r.offset();
  if (const std::uint32_t version = r.u32(); version != kSegmVersion) {
    throw ParseError(version_at, "unsupported SEGM version " + std::to_string(version));
  }
  const std::size_t dims_at = r.offset();
  const std::uint32_t channels = r.u32();
  const std::uint32_t k = r.u32();
  if (channels == 0 || k < 2 || channels > 1u << 12 || k > kIgnoreLabel) {
    throw ParseError(dims_at, "invalid model dimensions");
  }
  if (std::uint64_t(channels + 1) * k * 4 > r.remaining()) {
    throw ParseError(r.offset(), "truncated input: missing parameters");
  }
  PixelModel model{static_cast<int>(channels), static_cast<int>(k)};
  for (double& v : model.weights) v = r.f32();
  for (double& v : model.bias) v = r.f32();
  r.expect_end();
  return model;
}

void write_segm(const std::filesystem::path& path, const PixelModel& model) {
  write_file(path, encode_segm(model));
}

PixelModel read_segm(const std::filesystem::path& path) { return decode_segm(read_file(path)); }

}  // namespace aucseg
