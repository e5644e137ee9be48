// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Takes the aucseg CLI path from AUCSEG_CLI_PATH.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aucseg/coverage.hpp"
#include "aucseg/diagnostics.hpp"
#include "aucseg/memory_bank.hpp"
#include "aucseg/segd_io.hpp"
#include "aucseg/surrogate_losses.hpp"
#include "aucseg/synth_data.hpp"
#include "aucseg/trainer.hpp"
#include "oracles.hpp"

namespace aucseg {
namespace {

namespace fs = std::filesystem;
using oracle::central_difference;
using oracle::relative_error;

constexpr SurrogateKind kKinds[] = {SurrogateKind::kSquare, SurrogateKind::kHinge,
                                    SurrogateKind::kExponential};

// Collects failures of one criterion; the first few are echoed.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    if (failures_++ < 5) std::cout << "    failed: " << what << '\n';
  }
  void note(const std::string& line) { notes_.push_back(line); }
  bool ok() const { return failures_ == 0; }
  int checks() const { return checks_; }
  int failures() const { return failures_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  int checks_ = 0;
  int failures_ = 0;
  std::vector<std::string> notes_;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

void fast_vs_naive(Check& check) {
  Rng rng(1001);
  for (SurrogateKind kind : kKinds) {
    for (int instance = 0; instance < 200; ++instance) {
      const std::size_t np = 1 + rng.below(2000), nn = 1 + rng.below(2000);
      std::vector<double> pos(np), neg(nn);
      const double spread = 0.5 + 3.0 * rng.uniform();
      for (double& v : pos) v = spread * rng.normal();
      for (double& v : neg) v = spread * rng.normal() - 0.3;
      const auto fast = pair_loss(pos, neg, kind);
      const auto naive = pair_loss_naive(pos, neg, kind);
      check.expect(relative_error(fast.loss, naive.loss, 1e-300) <= 1e-9,
                   std::string(to_string(kind)) + " loss " + num(fast.loss) + " vs " + num(naive.loss));
      double scale = 0.0;
      for (double g : naive.grad_pos) scale = std::max(scale, std::abs(g));
      for (double g : naive.grad_neg) scale = std::max(scale, std::abs(g));
      double worst = 0.0;
      for (std::size_t i = 0; i < np; ++i) worst = std::max(worst, std::abs(fast.grad_pos[i] - naive.grad_pos[i]));
      for (std::size_t i = 0; i < nn; ++i) worst = std::max(worst, std::abs(fast.grad_neg[i] - naive.grad_neg[i]));
      check.expect(worst <= 1e-9 * std::max(scale, 1e-300),
                   std::string(to_string(kind)) + " gradient diff " + num(worst));
    }
  }
}

// ---------------------------------------------------------------------------

// Max relative FD error over every coordinate of x.
double fd_worst(const std::function<double(std::span<const double>)>& f,
                const std::vector<double>& x, const std::vector<double>& analytic) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], central_difference(f, x, i)));
  }
  return worst;
}

std::vector<double> flatten(std::span<const ScoreGrid> grids) {
  std::vector<double> out;
  for (const auto& g : grids) out.insert(out.end(), g.values().begin(), g.values().end());
  return out;
}

std::vector<double> flatten(const std::vector<GradientGrid>& grids) {
  std::vector<double> out;
  for (const auto& g : grids) out.insert(out.end(), g.values().begin(), g.values().end());
  return out;
}

std::vector<ScoreGrid> unflatten(std::span<const double> x, const std::vector<ScoreGrid>& shape) {
  std::vector<ScoreGrid> out = shape;
  std::size_t at = 0;
  for (auto& g : out) {
    for (double& v : g.values()) v = x[at++];
  }
  return out;
}

// Labels with at least two present classes.
std::vector<LabelGrid> labels_with_two_classes(Rng& rng, int items, int h, int w, int k) {
  for (;;) {
    auto labels = oracle::random_label_grids(rng, items, h, w, k, 0.1);
    std::vector<int> seen(k, 0);
    for (const auto& l : labels) {
      for (auto v : l.values()) {
        if (v != kIgnoreLabel) seen[v] = 1;
      }
    }
    if (std::count(seen.begin(), seen.end(), 1) >= 2) return labels;
  }
}

void gradient_checks(Check& check) {
  constexpr double kTol = 1e-4;
  constexpr int kInstances = 50;
  Rng rng(2002);

  for (SurrogateKind kind : kKinds) {
    for (int n = 0; n < kInstances; ++n) {
      const std::size_t np = 1 + rng.below(5), nn = 1 + rng.below(5);
      std::vector<double> x;
      // Hinge is not differentiable where a - b = 1; keep margins clear of it.
      for (bool clear = false; !clear;) {
        x = oracle::random_scores(rng, np + nn);
        for (double& v : x) v = 2.0 * v - 0.5;
        clear = true;
        for (std::size_t i = 0; i < np; ++i) {
          for (std::size_t j = np; j < np + nn; ++j) clear = clear && std::abs(x[i] - x[j] - 1.0) > 1e-3;
        }
      }
      auto f = [&](std::span<const double> z) { return pair_loss(z.first(np), z.subspan(np), kind).loss; };
      const auto r = pair_loss(std::span<const double>(x).first(np), std::span<const double>(x).subspan(np), kind);
      std::vector<double> g = r.grad_pos;
      g.insert(g.end(), r.grad_neg.begin(), r.grad_neg.end());
      const double worst = fd_worst(f, x, g);
      check.expect(worst <= kTol, "pair " + std::string(to_string(kind)) + " rel err " + num(worst));
    }
  }

  for (AucMode mode : {AucMode::kOneVsOne, AucMode::kOneVsAll}) {
    for (SurrogateKind kind : kKinds) {
      for (int n = 0; n < kInstances; ++n) {
        const int k = 2 + int(rng.below(3));
        const auto scores = oracle::random_score_grids(rng, 2, 2, 3, k);
        const auto labels = labels_with_two_classes(rng, 2, 2, 3, k);
        auto loss = [&](std::span<const ScoreGrid> s) {
          return mode == AucMode::kOneVsOne ? ovo_auc_loss(s, labels, kind) : ova_auc_loss(s, labels, kind);
        };
        auto f = [&](std::span<const double> z) { return loss(unflatten(z, scores)).loss; };
        const double worst = fd_worst(f, flatten(scores), flatten(loss(scores).gradient));
        check.expect(worst <= kTol, std::string(to_string(mode)) + " " + std::string(to_string(kind)) +
                                        " rel err " + num(worst));
      }
    }
  }

  for (int n = 0; n < kInstances; ++n) {
    const int k = 2 + int(rng.below(3));
    const auto scores = oracle::random_score_grids(rng, 2, 2, 3, k);
    const auto labels = labels_with_two_classes(rng, 2, 2, 3, k);
    auto f = [&](std::span<const double> z) { return ce_loss(unflatten(z, scores), labels).loss; };
    const double worst = fd_worst(f, flatten(scores), flatten(ce_loss(scores, labels).gradient));
    check.expect(worst <= kTol, "ce rel err " + num(worst));
  }

  for (int n = 0; n < kInstances; ++n) {
    const int k = 2 + int(rng.below(4));
    LogitGrid z(2, 2, k);
    for (double& v : z.values()) v = 2.0 * rng.normal();
    GradientGrid upstream(2, 2, k);
    for (double& v : upstream.values()) v = rng.normal();
    auto f = [&](std::span<const double> x) {
      LogitGrid zz = z;
      std::copy(x.begin(), x.end(), zz.values().begin());
      const ScoreGrid s = softmax_head(zz);
      double dot = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) dot += s.values()[j] * upstream.values()[j];
      return dot;
    };
    const GradientGrid dz = softmax_backward(softmax_head(z), upstream);
    const std::vector<double> x(z.values().begin(), z.values().end());
    const double worst = fd_worst(f, x, {dz.values().begin(), dz.values().end()});
    check.expect(worst <= kTol, "softmax backward rel err " + num(worst));
  }

  // Full pipeline: parameters -> affine -> softmax -> AUC + lambda * CE.
  for (int n = 0; n < kInstances; ++n) {
    TrainConfig config;
    config.surrogate = kKinds[n % 3];
    config.mode = n % 5 == 4 ? AucMode::kOneVsAll : AucMode::kOneVsOne;
    Sample s{FeatureGrid(2, 2, 2), LabelGrid(2, 2)};
    for (float& v : s.features.values()) v = float(rng.normal());
    s.labels.values()[0] = 0;
    s.labels.values()[1] = 1;
    s.labels.values()[2] = std::uint16_t(rng.below(2));
    s.labels.values()[3] = std::uint16_t(rng.below(2));
    const Batch batch{{s}};
    PixelModel model(2, 2);
    for (double& v : model.weights) v = 0.5 * rng.normal();
    for (double& v : model.bias) v = 0.5 * rng.normal();
    const Objective obj = evaluate_objective(model, batch, config);
    std::vector<double> params = model.weights, analytic = obj.grad.weights;
    params.insert(params.end(), model.bias.begin(), model.bias.end());
    analytic.insert(analytic.end(), obj.grad.bias.begin(), obj.grad.bias.end());
    auto f = [&](std::span<const double> x) {
      PixelModel m = model;
      std::copy(x.begin(), x.begin() + 4, m.weights.begin());
      std::copy(x.begin() + 4, x.end(), m.bias.begin());
      return evaluate_objective(m, batch, config).total;
    };
    const double worst = fd_worst(f, params, analytic);
    check.expect(worst <= kTol, "pipeline rel err " + num(worst));
  }
}

// ---------------------------------------------------------------------------

bool close_abs(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

void compare_to_brute(Check& check, const LossReport& r, const oracle::BruteLoss& brute,
                      const std::string& what) {
  check.expect(close_abs(r.loss, brute.loss), what + " loss " + num(r.loss) + " vs " + num(brute.loss));
  double worst = 0.0;
  for (std::size_t i = 0; i < r.gradient.size(); ++i) {
    const auto g = r.gradient[i].values();
    for (std::size_t j = 0; j < g.size(); ++j) worst = std::max(worst, std::abs(g[j] - brute.grad[i][j]));
  }
  check.expect(worst <= 1e-12, what + " gradient diff " + num(worst));
}

// Random features/labels batch; labels drawn from `classes`.
Batch random_batch(Rng& rng, int items, int h, int w, const std::vector<int>& classes) {
  Batch b;
  for (int i = 0; i < items; ++i) {
    Sample s{FeatureGrid(h, w, 1), LabelGrid(h, w)};
    for (float& v : s.features.values()) v = float(rng.normal());
    for (auto& v : s.labels.values()) v = std::uint16_t(classes[rng.below(classes.size())]);
    b.items.push_back(std::move(s));
  }
  return b;
}

std::vector<ScoreGrid> random_scores_for(Rng& rng, const Batch& b, int k) {
  return oracle::random_score_grids(rng, b.size(), b.items[0].labels.height(),
                                    b.items[0].labels.width(), k);
}

void brute_force_equivalence(Check& check) {
  Rng rng(3003);
  for (SurrogateKind kind : kKinds) {
    for (int n = 0; n < 60; ++n) {
      const int k = 2 + int(rng.below(3));
      const int items = 1 + int(rng.below(4));
      const int h = 1 + int(rng.below(4)), w = 2 + int(rng.below(3));  // 2..64 pixels
      const auto scores = oracle::random_score_grids(rng, items, h, w, k);
      const auto labels = labels_with_two_classes(rng, items, h, w, k);
      compare_to_brute(check, ovo_auc_loss(scores, labels, kind), oracle::brute_ovo(scores, labels, kind),
                       "plain " + std::string(to_string(kind)));
    }
  }

  // Augmented batches: real bank pastes of classes 2 and 3 into batches
  // holding only classes 0 and 1.
  int augmented = 0;
  for (int n = 0; n < 150; ++n) {
    BankConfig config;
    config.sample_ratio = 1.0;
    config.resize_ratio = 0.3 + 0.7 * rng.uniform();
    TailMemoryBank bank({2, 3}, config);
    bank.store(random_batch(rng, 2, 4, 4, {0, 1, 2, 3}), rng);
    const Batch batch = random_batch(rng, 2, 4, 4, {0, 1});
    const PasteResult pasted = bank.retrieve_and_paste(batch, rng);
    if (pasted.log.empty()) continue;
    ++augmented;
    const auto labels = pasted.batch.labels();
    const auto scores = random_scores_for(rng, pasted.batch, 4);
    const SurrogateKind kind = kKinds[n % 3];
    for (PairNormalization norm : {PairNormalization::kUnionCounts, PairNormalization::kOriginalCounts}) {
      const PastedPixels px{pasted.pasted, norm};
      const bool original = norm == PairNormalization::kOriginalCounts;
      compare_to_brute(check, ovo_auc_loss(scores, labels, kind, &px),
                       oracle::brute_ovo(scores, labels, kind, pasted.pasted, original),
                       "augmented " + std::string(to_string(norm)) + " " + std::string(to_string(kind)));
    }
  }
  check.expect(augmented >= 100, "only " + std::to_string(augmented) + " augmented batches");
  check.note("augmented batches checked: " + std::to_string(augmented));
}

// ---------------------------------------------------------------------------

void coverage_criterion(Check& check) {
  const PresenceModel model{std::vector<double>(19, 0.01)};
  const double delta = 0.01;
  const std::int64_t b = required_batch_size(model, delta);
  const double closed = std::log(delta / 19.0) / std::log(1.0 - 0.01);
  check.expect(b == std::int64_t(std::ceil(closed)), "B " + std::to_string(b) + " vs closed form " + num(closed));
  const std::int64_t trials = 100000;
  const double failure = 1.0 - simulate_coverage(model, b, trials, 4004);
  const double bound = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / double(trials));
  check.expect(failure <= bound, "failure rate " + num(failure) + " > " + num(bound));
  const double at_quoted = 1.0 - simulate_coverage(model, 759, trials, 4004);
  check.note("closed form ln(delta/K)/ln(1-p) = " + num(closed) + " -> B = " + std::to_string(b) +
             "; published figure 759");
  check.note("failure at B = " + num(failure) + " (limit " + num(bound) + "); at 759 = " + num(at_quoted));
}

// ---------------------------------------------------------------------------

Batch bank_batch(Rng& rng, int items, int classes) {
  Batch b;
  for (int i = 0; i < items; ++i) {
    Sample s{FeatureGrid(16, 16, 2), LabelGrid(16, 16, 0)};
    for (float& v : s.features.values()) v = float(rng.normal());
    for (int c = 1; c < classes; ++c) {
      if (!rng.bernoulli(0.25)) continue;
      const int h = 1 + int(rng.below(7)), w = 1 + int(rng.below(7));
      const int top = int(rng.below(16 - h + 1)), left = int(rng.below(16 - w + 1));
      for (int r = top; r < top + h; ++r) {
        for (int col = left; col < left + w; ++col) {
          if (rng.bernoulli(0.8)) {
            s.labels.at(r, col) = std::uint16_t(c);
            s.features.at(r, col, 1) = float(c);
          }
        }
      }
    }
    b.items.push_back(std::move(s));
  }
  return b;
}

void bank_suite(Check& check) {
  const BankConfig defaults;
  check.expect(defaults.memory_size == 5 && defaults.sample_ratio == 0.05 && defaults.resize_ratio == 0.4,
               "bank defaults");
  check.expect(sample_count(10, defaults.sample_ratio) == 1, "n_sample for 10 missing");

  const std::vector<int> tail{4, 5, 6, 7, 8, 9, 10, 11};
  for (ReplacementStrategy strategy : {ReplacementStrategy::kRandom, ReplacementStrategy::kFifo,
                                       ReplacementStrategy::kLifo, ReplacementStrategy::kPriorityUsed}) {
    const std::string name(to_string(strategy));
    BankConfig config;
    config.strategy = strategy;

    // Cold start: an empty bank never changes a batch or consumes randomness.
    {
      TailMemoryBank bank(tail, config);
      Rng data(5), rng(6);
      const Batch batch = bank_batch(data, 4, 12);
      const Rng before = rng;
      const PasteResult r = bank.retrieve_and_paste(batch, rng);
      check.expect(r.batch == batch && r.log.empty() && rng == before, name + " cold start");
    }

    auto run = [&](std::uint64_t seed, bool verify) {
      BankConfig c = config;
      c.sample_ratio = verify ? defaults.sample_ratio : 0.5;
      TailMemoryBank bank(tail, c);
      Rng data(seed), rng(seed + 1);
      std::vector<PasteResult> results;
      for (int step = 0; step < 300; ++step) {
        const Batch batch = bank_batch(data, 4, 12);
        const auto missing = missing_tail_classes(batch, tail);
        bank.store(batch, rng);
        PasteResult r = bank.retrieve_and_paste(batch, rng);
        if (verify) {
          for (int cls : tail) check.expect(bank.size(cls) <= std::size_t(c.memory_size), name + " capacity");
          const std::size_t want = bank.empty() ? 0 : sample_count(missing.size(), c.sample_ratio);
          check.expect(r.attempts == want, name + " n_sample " + std::to_string(r.attempts) + " vs " +
                                               std::to_string(want));
          for (std::size_t i = 0; i < batch.size(); ++i) {
            for (std::size_t p = 0; p < 256; ++p) {
              const auto& a = batch.items[i];
              const auto& b = r.batch.items[i];
              if (!r.pasted[i][p]) {
                check.expect(a.labels.at(p) == b.labels.at(p) && a.features.at(p, 0) == b.features.at(p, 0) &&
                                 a.features.at(p, 1) == b.features.at(p, 1),
                             name + " purity");
              } else {
                const auto label = b.labels.at(p);
                const bool logged = std::any_of(r.log.begin(), r.log.end(), [&](const PasteRecord& rec) {
                  return rec.image == i && rec.class_id == label;
                });
                check.expect(logged && b.features.at(p, 1) == float(label), name + " label consistency");
              }
            }
          }
        }
        results.push_back(std::move(r));
      }
      return std::make_pair(bank, results);
    };
    // One pass at the default ratio with invariant checks, then replays.
    run(7, true);
    const auto a = run(8, false), b = run(8, false);
    bool same = a.first == b.first && a.second.size() == b.second.size();
    std::size_t pastes = 0;
    for (std::size_t i = 0; same && i < a.second.size(); ++i) {
      same = a.second[i].batch == b.second[i].batch && a.second[i].log == b.second[i].log;
      pastes += a.second[i].log.size();
    }
    check.expect(same, name + " seeded replay");
    check.expect(pastes > 0, name + " replay performed no pastes");
  }
}

// ---------------------------------------------------------------------------

struct DirectionalRun {
  double auc_bank_tail = 0.0;
  double ce_tail = 0.0;
};

void directional_claim(Check& check) {
  constexpr int kSeeds = 5;
  std::vector<DirectionalRun> runs;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    GenConfig gen;  // K = 12, 48x48, 400 images, zipf 1.2, tail presence 0.05
    gen.seed = std::uint64_t(seed);
    const LabeledDataset data = generate(gen).dataset;

    TrainConfig auc_bank;
    auc_bank.seed = std::uint64_t(seed);
    TrainConfig ce_only = auc_bank;
    ce_only.use_auc = false;
    ce_only.use_bank = false;

    DirectionalRun r;
    r.auc_bank_tail = train(data, auc_bank).history.back().metrics.tail_miou;
    r.ce_tail = train(data, ce_only).history.back().metrics.tail_miou;
    runs.push_back(r);
    check.note("seed " + std::to_string(seed) + ": tail mIoU AUC+CE+bank " + num(r.auc_bank_tail) +
               ", CE only " + num(r.ce_tail));
  }
  double mean_auc = 0.0, mean_ce = 0.0;
  int wins = 0;
  for (const auto& r : runs) {
    mean_auc += r.auc_bank_tail / kSeeds;
    mean_ce += r.ce_tail / kSeeds;
    wins += r.auc_bank_tail > r.ce_tail;
  }
  check.note("mean tail mIoU " + num(mean_auc) + " vs " + num(mean_ce) + ", wins " + std::to_string(wins) + "/5");
  check.expect(mean_auc > mean_ce, "mean tail mIoU not improved");
  check.expect(wins >= 4, "sign test " + std::to_string(wins) + "/5");
}

// ---------------------------------------------------------------------------

LabelGrid grid4(std::initializer_list<std::uint16_t> v) {
  LabelGrid g(4, 4);
  std::copy(v.begin(), v.end(), g.values().begin());
  return g;
}

constexpr std::uint16_t I = kIgnoreLabel;

struct IouFixture {
  LabelGrid truth, pred;
  int k;
  Partition partition;
  std::vector<double> iou;  // NaN = undefined
  double head, middle, tail;
};

std::vector<IouFixture> iou_fixtures() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<IouFixture> f;
  // Identity.
  f.push_back({grid4({0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2}),
               grid4({0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2}), 3, {{2}, {0}, {1}},
               {1.0, 1.0, 1.0}, 1.0, 1.0, 1.0});
  // Class 1 predicted entirely as 0: TP0 4 FP0 4 -> 0.5, IoU1 = 0.
  f.push_back({grid4({0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2}),
               grid4({0, 0, 0, 0, 0, 0, 0, 0, 2, 2, 2, 2, 2, 2, 2, 2}), 3, {{2}, {0}, {1}},
               {0.5, 0.0, 1.0}, 1.0, 0.5, 0.0});
  // Mixed errors with an ignored pixel:
  // class 0 TP3 FP1 FN1 = 3/5, class 1 TP3 FP1 FN1 = 3/5, class 2 TP6 FP1 FN1 = 6/8.
  f.push_back({grid4({0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 2, I, 2, 2, 2, 2}),
               grid4({0, 1, 1, 1, 0, 0, 1, 2, 2, 2, 0, 0, 2, 2, 2, 2}), 3, {{2}, {}, {0, 1}},
               {0.6, 0.6, 0.75}, 0.75, nan, 0.6});
  // Class 3 absent from both -> undefined; class 2 only predicted -> IoU 0.
  // class 0: TP 7, FP 1 (pred 0 at truth 1), FN 1 (truth 0 pred 2) -> 7/9
  // class 1: TP 6, FP 0, FN 1 -> 6/7; class 2: TP 0, FP 1, FN 0 -> 0.
  f.push_back({grid4({0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, I}),
               grid4({0, 0, 0, 0, 0, 0, 0, 2, 0, 1, 1, 1, 1, 1, 1, 3}), 4, {{0}, {1}, {2}},
               {7.0 / 9.0, 6.0 / 7.0, 0.0, nan}, 7.0 / 9.0, 6.0 / 7.0, 0.0});
  // Checkerboard swap of two classes: every pixel wrong.
  f.push_back({grid4({0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0}),
               grid4({1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1}), 2, {{0}, {}, {1}},
               {0.0, 0.0}, 0.0, nan, 0.0});
  return f;
}

bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || std::abs(a - b) <= 1e-15; }

void metric_oracles(Check& check) {
  Rng rng(7007);
  for (int n = 0; n < 100; ++n) {
    const int k = 2 + int(rng.below(3));
    auto scores = oracle::random_score_grids(rng, 2, 3, 5, k);
    if (n % 2 == 0) {
      for (auto& g : scores) {
        for (double& v : g.values()) v = std::round(v * 6.0) / 6.0;  // force ties
      }
    }
    const auto labels = labels_with_two_classes(rng, 2, 3, 5, k);
    const double fast = ovo_auc_metric(scores, labels);
    const double brute = oracle::brute_auc(scores, labels);
    check.expect(fast == brute, "ovo auc " + num(fast) + " vs " + num(brute));
  }

  int index = 0;
  for (const IouFixture& f : iou_fixtures()) {
    const std::vector<LabelGrid> truth{f.truth}, pred{f.pred};
    const MetricReport r = iou_report(pred, truth, f.partition, f.k);
    const std::string tag = "iou fixture " + std::to_string(index++);
    for (int c = 0; c < f.k; ++c) {
      const double got = r.per_class_iou[c].value_or(std::numeric_limits<double>::quiet_NaN());
      check.expect(same_value(got, f.iou[c]), tag + " class " + std::to_string(c) + " " + num(got));
    }
    check.expect(same_value(r.head_miou, f.head) && same_value(r.middle_miou, f.middle) &&
                     same_value(r.tail_miou, f.tail),
                 tag + " groups");
  }

  for (int seed = 1; seed <= 5; ++seed) {
    GenConfig gen;
    gen.num_classes = 8;
    gen.height = gen.width = 24;
    gen.images = 60;
    gen.seed = std::uint64_t(seed);
    const LabeledDataset data = generate(gen).dataset;
    const auto labels = data.labels();
    const ClassStats stats = class_stats(labels, gen.num_classes);

    // Recount straight from the label grids.
    std::vector<std::int64_t> total(gen.num_classes, 0), biggest(gen.num_classes, 0);
    for (const auto& g : labels) {
      std::vector<std::int64_t> here(gen.num_classes, 0);
      for (auto v : g.values()) ++here[v];
      for (int c = 0; c < gen.num_classes; ++c) {
        total[c] += here[c];
        biggest[c] = std::max(biggest[c], here[c]);
      }
    }
    std::int64_t best_num = 0, best_den = 1;
    for (int c = 0; c < gen.num_classes; ++c) {
      if (total[c] > 0 && biggest[c] * best_den > best_num * total[c]) best_num = biggest[c], best_den = total[c];
    }
    const double ratio = double(best_num) / double(best_den);
    check.expect(compute_tau(stats) == ratio * ratio, "tau seed " + std::to_string(seed));
    const double mean_ratio = double(best_num * std::int64_t(labels.size())) / double(best_den);
    check.expect(tau_mean_normalized(stats) == mean_ratio * mean_ratio, "mean tau seed " + std::to_string(seed));

    const std::vector<int> head{0, 1};
    double sum = 0.0;
    int pairs = 0;
    for (int a : head) {
      for (int b = 2; b < gen.num_classes; ++b) {
        sum += double(total[a]) / double(total[b]);
        ++pairs;
      }
    }
    check.expect(std::abs(compute_rm(stats, head) - sum / pairs) <= 1e-12 * sum / pairs,
                 "r_m seed " + std::to_string(seed));
  }

  ClassStats worked;
  worked.num_classes = 3;
  worked.count = {100, 1, 10};
  worked.per_image = {worked.count};
  check.expect(compute_rm(worked, std::vector<int>{0}) == 55.0, "r_m worked example");
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism_and_formats(Check& check) {
  const std::string cli = AUCSEG_CLI_PATH;
  const fs::path dir = fs::temp_directory_path() / "aucseg_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = (dir / "data.segd").string();
  check.expect(shell(cli + " gen-data --out " + data +
                     " --classes 8 --images 80 --size 24x24 --zipf 1.2 --seed 11 > /dev/null") == 0,
               "gen-data");

  auto train = [&](const std::string& name, int threads) {
    const fs::path out = dir / name;
    const int rc = shell("AUCSEG_THREADS=" + std::to_string(threads) + " " + cli + " train --data " + data +
                         " --out " + out.string() + " --max-iter 300 --eval-every 50 --seed 3 > /dev/null");
    check.expect(rc == 0, "train " + name);
    return std::make_pair(slurp(out / "metrics.csv"), slurp(out / "final_model.segm"));
  };
  const auto a = train("a", 1), b = train("b", 1), c = train("c", 4);
  check.expect(!a.first.empty() && a.first == b.first, "metrics.csv differs between identical runs");
  check.expect(a.first == c.first, "metrics.csv differs between 1 and 4 threads");
  check.expect(a.second == b.second && a.second == c.second, "final model differs");

  // Round trips.
  const LabeledDataset ds = read_segd(data);
  check.expect(encode_segd(ds) == read_file(data), "SEGD round trip");
  const PixelModel model = read_segm(dir / "a" / "final_model.segm");
  const auto model_bytes = read_file(dir / "a" / "final_model.segm");
  check.expect(encode_segm(model) == model_bytes, "SEGM round trip");

  // Corrupted headers.
  auto expect_parse_error = [&](std::vector<std::byte> bytes, std::size_t offset, bool segd,
                                const std::string& what) {
    try {
      if (segd) {
        decode_segd(bytes);
      } else {
        decode_segm(bytes);
      }
      check.expect(false, what + ": no error");
    } catch (const ParseError& e) {
      check.expect(e.offset() == offset, what + ": offset " + std::to_string(e.offset()));
    }
  };
  auto segd = read_file(data);
  auto bad = segd;
  bad[2] = std::byte{'Z'};
  expect_parse_error(bad, 0, true, "SEGD magic");
  bad = segd;
  bad[4] = std::byte{9};
  expect_parse_error(bad, 4, true, "SEGD version");
  bad = segd;
  bad[12] = bad[13] = bad[14] = bad[15] = std::byte{0};
  expect_parse_error(bad, 12, true, "SEGD class count");
  expect_parse_error({segd.begin(), segd.begin() + 40}, 28, true, "SEGD truncated");
  bad = model_bytes;
  bad[0] = std::byte{'X'};
  expect_parse_error(bad, 0, false, "SEGM magic");
  bad = model_bytes;
  bad[5] = std::byte{1};
  expect_parse_error(bad, 4, false, "SEGM version");

  write_file(dir / "corrupt.segd", bad);
  const fs::path err = dir / "stderr.txt";
  const int rc = shell(cli + " eval --data " + (dir / "corrupt.segd").string() + " --model " +
                       (dir / "a" / "final_model.segm").string() + " > /dev/null 2> " + err.string());
  const std::string message = slurp(err);
  check.expect(rc == 3 && message.rfind("error: parse: at byte 0:", 0) == 0,
               "CLI corrupt input: rc " + std::to_string(rc) + " " + message);
  check.note("metrics.csv identical across runs and AUCSEG_THREADS 1/4 (" + std::to_string(a.first.size()) +
             " bytes)");
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* id;
  const char* title;
  double budget_seconds;
  void (*run)(Check&);
};

}  // namespace
}  // namespace aucseg

int main(int argc, char** argv) {
  using namespace aucseg;
  const Criterion criteria[] = {
      {"AC1", "fast pair kernels match the naive oracle", 30, fast_vs_naive},
      {"AC2", "analytic gradients match central differences", 60, gradient_checks},
      {"AC3", "pooled OvO loss matches pair materialisation", 0, brute_force_equivalence},
      {"AC4", "batch size for class coverage", 60, coverage_criterion},
      {"AC5", "memory bank behaviour", 30, bank_suite},
      {"AC6", "AUC + CE + bank beats CE on tail mIoU", 900, directional_claim},
      {"AC7", "metric oracles", 0, metric_oracles},
      {"AC8", "determinism and file formats", 0, determinism_and_formats},
  };
  int failed = 0;
  // Optional arguments select criteria by id, e.g. `acceptance AC1 AC4`.
  const std::vector<std::string> only(argv + 1, argv + argc);
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0) check.expect(seconds <= c.budget_seconds, "over time budget");
    failed += !check.ok();
    std::printf("%s %s: %s [%d checks, %d failed, %.1f s]\n", c.id, check.ok() ? "PASS" : "FAIL", c.title,
                check.checks(), check.failures(), seconds);
    for (const auto& line : check.notes()) std::printf("    %s\n", line.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
