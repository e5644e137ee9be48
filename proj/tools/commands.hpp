#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "aucseg/synth_data.hpp"
#include "aucseg/trainer.hpp"

namespace aucseg::cli {

struct GenDataArgs {
  std::string out;
  GenConfig config;
  double tail_presence = 0.05;
  double head_presence = 0.9;
};

struct TrainArgs {
  std::string data;
  std::string out_dir;
  std::string bank_out;
  TrainConfig config;
  // Enumerated flags as typed; resolved into `config` after parsing.
  std::string objective = "auc";
  std::string surrogate = "square";
  std::string mode = "ovo";
  std::string pair_norm = "union";
  std::string strategy = "random";
};

struct EvalArgs {
  std::string data;
  std::string model;
  double head_fraction = 0.25;
  double tail_fraction = 0.35;
};

struct CoverageArgs {
  int classes = 19;
  double pmin = 0.01;
  double delta = 0.01;
  std::int64_t trials = 100000;
  std::uint64_t seed = 0;
};

struct BenchArgs {
  int pixels = 1000;
  int classes = 4;
  std::string surrogate = "square";
  int repeat = 5;
  int naive_limit = 20000;
  std::uint64_t seed = 0;
};

void run_gen_data(const GenDataArgs& args, std::ostream& out);
void run_train(const TrainArgs& args, std::ostream& out);
void run_eval(const EvalArgs& args, std::ostream& out);
void run_simulate_coverage(const CoverageArgs& args, std::ostream& out);
void run_bench_loss(const BenchArgs& args, std::ostream& out);

}  // namespace aucseg::cli
