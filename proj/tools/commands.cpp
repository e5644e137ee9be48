#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "aucseg/coverage.hpp"
#include "aucseg/diagnostics.hpp"
#include "aucseg/segd_io.hpp"
#include "aucseg/surrogate_losses.hpp"

namespace aucseg::cli {
namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void run_gen_data(const GenDataArgs& args, std::ostream& out) {
  GenConfig config = args.config;
  if (config.presence.empty()) {
    config.presence = default_presence(config.num_classes, args.tail_presence, args.head_presence);
  }
  const GeneratedData g = generate(config);
  write_segd(args.out, g.dataset);

  const auto labels = g.dataset.labels();
  const ClassStats stats = class_stats(labels, config.num_classes);
  out << "class,pixels,images_present\n";
  for (int c = 0; c < config.num_classes; ++c) {
    std::int64_t images = 0;
    for (std::size_t i = 0; i < stats.image_count(); ++i) images += stats.present(i, c);
    out << c << ',' << stats.count[c] << ',' << images << '\n';
  }
}

void run_train(const TrainArgs& args, std::ostream& out) {
  const LabeledDataset data = read_segd(args.data);
  const TrainResult result = train(data, args.config);

  const std::filesystem::path dir(args.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream csv = open_output(dir / "metrics.csv");
    write_metrics_csv(csv, result.history);
    if (!csv.flush()) throw IoError("failed writing metrics.csv");
  }
  write_segm(dir / "final_model.segm", result.model);
  if (!args.bank_out.empty()) {
    if (!result.bank) throw ValidationError("--bank-out needs the memory bank enabled");
    write_segd(args.bank_out, bank_to_dataset(*result.bank, data.num_classes));
  }

  const EvalRecord& last = result.history.back();
  out << "iter,overall_miou,head_miou,middle_miou,tail_miou,ovo_auc\n"
      << last.iter << ',' << fmt(last.metrics.overall_miou) << ','
      << fmt(last.metrics.head_miou) << ',' << fmt(last.metrics.middle_miou) << ','
      << fmt(last.metrics.tail_miou) << ',' << fmt(last.metrics.ovo_auc) << '\n';
}

void run_eval(const EvalArgs& args, std::ostream& out) {
  const LabeledDataset data = read_segd(args.data);
  const PixelModel model = read_segm(args.model);
  if (model.num_classes != data.num_classes || model.channels != data.channels) {
    throw ValidationError("model shape does not match the dataset");
  }
  if (data.samples.empty()) throw ValidationError("empty dataset");
  const auto labels = data.labels();
  const ClassStats stats = class_stats(labels, data.num_classes);
  const Partition partition = group_classes(stats, args.head_fraction, args.tail_fraction);
  const MetricReport m = evaluate(model, data.samples, partition, data.num_classes);

  // r_m needs every non-head class to occur.
  double rm = MetricReport::kUndefined;
  const bool all_present =
      std::all_of(stats.count.begin(), stats.count.end(), [](std::int64_t n) { return n > 0; });
  if (all_present) rm = compute_rm(stats, partition.head);

  out << "overall_miou,head_miou,middle_miou,tail_miou,ovo_auc,tau,tau_mean_normalized,r_m\n"
      << fmt(m.overall_miou) << ',' << fmt(m.head_miou) << ',' << fmt(m.middle_miou) << ','
      << fmt(m.tail_miou) << ',' << fmt(m.ovo_auc) << ',' << fmt(compute_tau(stats)) << ','
      << fmt(tau_mean_normalized(stats)) << ',' << fmt(rm) << '\n';
}

void run_simulate_coverage(const CoverageArgs& args, std::ostream& out) {
  if (args.classes < 1) throw ValidationError("--classes must be positive");
  // Every class at p_min: the case the union bound is tight for.
  const PresenceModel model{std::vector<double>(std::size_t(args.classes), args.pmin)};
  const std::int64_t b = required_batch_size(model, args.delta);

  out << "label,batch_size,coverage,failure_rate,union_bound\n";
  const std::pair<const char*, std::int64_t> rows[] = {{"B-1", b - 1}, {"B", b}, {"2B", 2 * b}};
  for (const auto& [label, size] : rows) {
    if (size < 1) continue;
    const double coverage = simulate_coverage(model, size, args.trials, args.seed);
    const double bound = std::min(1.0, args.classes * std::pow(1.0 - args.pmin, double(size)));
    out << label << ',' << size << ',' << fmt(coverage) << ',' << fmt(1.0 - coverage) << ','
        << fmt(bound) << '\n';
  }
}

void run_bench_loss(const BenchArgs& args, std::ostream& out) {
  if (args.pixels < 2) throw ValidationError("--pixels must be at least 2");
  if (args.classes < 2) throw ValidationError("--classes must be at least 2");
  if (args.repeat < 1) throw ValidationError("--repeat must be positive");
  const SurrogateKind kind = parse_surrogate(args.surrogate);

  Rng rng(args.seed);
  std::vector<ScoreGrid> scores{ScoreGrid(1, args.pixels, args.classes)};
  std::vector<LabelGrid> labels{LabelGrid(1, args.pixels)};
  for (std::size_t p = 0; p < std::size_t(args.pixels); ++p) {
    // First pixels cover every class so no pair is empty.
    labels[0].at(p) = std::uint16_t(p < std::size_t(args.classes) ? p : rng.below(args.classes));
    double sum = 0.0;
    for (int c = 0; c < args.classes; ++c) sum += (scores[0].at(p, c) = 0.01 + rng.uniform());
    for (int c = 0; c < args.classes; ++c) scores[0].at(p, c) /= sum;
  }

  using Clock = std::chrono::steady_clock;
  auto best_ms = [&](auto&& fn) {
    double best = 1e300;
    for (int r = 0; r < args.repeat; ++r) {
      const auto t0 = Clock::now();
      fn();
      best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    return best;
  };

  // Per-class channel scores split by label, as the pooled loss sees them.
  auto split = [&](std::size_t limit) {
    std::vector<std::vector<std::vector<double>>> by_class(
        args.classes, std::vector<std::vector<double>>(args.classes));
    for (std::size_t p = 0; p < limit; ++p) {
      for (int c = 0; c < args.classes; ++c) by_class[c][labels[0].at(p)].push_back(scores[0].at(p, c));
    }
    return by_class;
  };
  auto sum_pairs = [&](const auto& by_class, bool naive) {
    double total = 0.0;
    std::vector<PairLossResult> results;
    for (int c = 0; c < args.classes; ++c) {
      for (int d = 0; d < args.classes; ++d) {
        if (c == d || by_class[c][c].empty() || by_class[c][d].empty()) continue;
        results.push_back(naive ? pair_loss_naive(by_class[c][c], by_class[c][d], kind)
                                : pair_loss(by_class[c][c], by_class[c][d], kind));
        total += results.back().loss;
      }
    }
    return std::make_pair(total, std::move(results));
  };

  const auto full = split(std::size_t(args.pixels));
  const double fast_ms = best_ms([&] { sum_pairs(full, false); });

  // Beyond the naive limit the quadratic reference runs on a prefix subset.
  const std::size_t checked = std::min<std::size_t>(std::size_t(args.pixels), std::size_t(args.naive_limit));
  const auto subset = checked == std::size_t(args.pixels) ? full : split(checked);
  const double naive_ms = best_ms([&] { sum_pairs(subset, true); });

  const auto [fast_loss, fast_terms] = sum_pairs(subset, false);
  const auto [naive_loss, naive_terms] = sum_pairs(subset, true);
  double worst = std::abs(fast_loss - naive_loss) / std::max(1.0, std::abs(naive_loss));
  for (std::size_t t = 0; t < fast_terms.size(); ++t) {
    for (std::size_t i = 0; i < fast_terms[t].grad_pos.size(); ++i) {
      worst = std::max(worst, std::abs(fast_terms[t].grad_pos[i] - naive_terms[t].grad_pos[i]));
    }
    for (std::size_t i = 0; i < fast_terms[t].grad_neg.size(); ++i) {
      worst = std::max(worst, std::abs(fast_terms[t].grad_neg[i] - naive_terms[t].grad_neg[i]));
    }
  }

  out << "surrogate,pixels,classes,checked_pixels,naive_ms,fast_ms,speedup,max_diff\n"
      << to_string(kind) << ',' << args.pixels << ',' << args.classes << ',' << checked << ','
      << fmt(naive_ms) << ',' << fmt(fast_ms) << ',' << fmt(naive_ms / std::max(fast_ms, 1e-9))
      << ',' << fmt(worst) << '\n';
  if (!(worst <= 1e-9)) {
    throw NumericalError("fast and naive losses differ: max relative difference " + fmt(worst) +
                         " (naive " + fmt(naive_loss) + ", fast " + fmt(fast_loss) + ")");
  }
}

}  // namespace aucseg::cli
