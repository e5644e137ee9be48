#include <benchmark/benchmark.h>

#include "aucseg/memory_bank.hpp"
#include "aucseg/synth_data.hpp"

namespace aucseg {
namespace {

Batch first_batch(const LabeledDataset& data, std::size_t size) {
  return Batch{{data.samples.begin(), data.samples.begin() + std::ptrdiff_t(size)}};
}

void BM_BankStoreRetrieve(benchmark::State& state) {
  GenConfig gen;
  gen.images = 64;
  const GeneratedData g = generate(gen);
  const auto labels = g.dataset.labels();
  const auto tail = select_tail_classes(class_stats(labels, gen.num_classes), 0.35);
  BankConfig config;
  config.sample_ratio = 1.0;
  TailMemoryBank bank(tail, config);
  Rng rng(3);
  std::size_t next = 0;
  for (auto _ : state) {
    Batch batch{{g.dataset.samples[next % 64], g.dataset.samples[(next + 1) % 64],
                 g.dataset.samples[(next + 2) % 64], g.dataset.samples[(next + 3) % 64]}};
    next += 4;
    bank.store(batch, rng);
    benchmark::DoNotOptimize(bank.retrieve_and_paste(batch, rng));
  }
}
BENCHMARK(BM_BankStoreRetrieve);

void BM_ExtractPatch(benchmark::State& state) {
  GenConfig gen;
  gen.images = 4;
  gen.presence.assign(std::size_t(gen.num_classes), 1.0);
  const GeneratedData g = generate(gen);
  const Batch batch = first_batch(g.dataset, 1);
  for (auto _ : state) benchmark::DoNotOptimize(extract_patch(batch.items[0], gen.num_classes - 1));
}
BENCHMARK(BM_ExtractPatch);

}  // namespace
}  // namespace aucseg
