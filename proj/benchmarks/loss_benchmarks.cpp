#include <benchmark/benchmark.h>

#include <vector>

#include "aucseg/rng.hpp"
#include "aucseg/surrogate_losses.hpp"

namespace aucseg {
namespace {

std::vector<double> scores(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform();
  return v;
}

template <SurrogateKind kKind>
void BM_PairLossNaive(benchmark::State& state) {
  Rng rng(1);
  const auto pos = scores(rng, std::size_t(state.range(0)));
  const auto neg = scores(rng, std::size_t(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pair_loss_naive(pos, neg, kKind));
  state.SetComplexityN(state.range(0));
}

template <SurrogateKind kKind>
void BM_PairLossFast(benchmark::State& state) {
  Rng rng(1);
  const auto pos = scores(rng, std::size_t(state.range(0)));
  const auto neg = scores(rng, std::size_t(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pair_loss(pos, neg, kKind));
  state.SetComplexityN(state.range(0));
}

BENCHMARK(BM_PairLossNaive<SurrogateKind::kSquare>)->RangeMultiplier(4)->Range(64, 4096)->Complexity();
BENCHMARK(BM_PairLossFast<SurrogateKind::kSquare>)->RangeMultiplier(4)->Range(64, 1 << 16)->Complexity();
BENCHMARK(BM_PairLossNaive<SurrogateKind::kHinge>)->RangeMultiplier(4)->Range(64, 4096)->Complexity();
BENCHMARK(BM_PairLossFast<SurrogateKind::kHinge>)->RangeMultiplier(4)->Range(64, 1 << 16)->Complexity();
BENCHMARK(BM_PairLossNaive<SurrogateKind::kExponential>)->RangeMultiplier(4)->Range(64, 4096)->Complexity();
BENCHMARK(BM_PairLossFast<SurrogateKind::kExponential>)->RangeMultiplier(4)->Range(64, 1 << 16)->Complexity();

void BM_OvoAucLoss(benchmark::State& state) {
  const int side = int(state.range(0));
  const int k = 12;
  Rng rng(2);
  std::vector<ScoreGrid> s;
  std::vector<LabelGrid> l;
  for (int i = 0; i < 4; ++i) {
    ScoreGrid g(side, side, k);
    for (std::size_t p = 0; p < g.pixel_count(); ++p) {
      double sum = 0.0;
      for (int c = 0; c < k; ++c) sum += (g.at(p, c) = rng.uniform());
      for (int c = 0; c < k; ++c) g.at(p, c) /= sum;
    }
    LabelGrid lg(side, side);
    for (auto& v : lg.values()) v = std::uint16_t(rng.below(k));
    s.push_back(std::move(g));
    l.push_back(std::move(lg));
  }
  for (auto _ : state) benchmark::DoNotOptimize(ovo_auc_loss(s, l, SurrogateKind::kSquare));
  state.SetItemsProcessed(state.iterations() * 4 * side * side);
}
BENCHMARK(BM_OvoAucLoss)->Arg(16)->Arg(48)->Arg(128);

}  // namespace
}  // namespace aucseg
