// aucseg: data generation, training, evaluation, coverage simulation and
// loss benchmarks over the aucseg core library.
//
// Exit codes: 0 success, 2 usage, 3 validation / parse / io, 4 numerical.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "aucseg/error.hpp"
#include "commands.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;

int fail(std::string_view code, const std::string& message, int exit_code) {
  std::cerr << "error: " << code << ": " << message << '\n';
  return exit_code;
}

// Parses "48x48" (or "48X48"); returns false on anything else.
bool parse_size(const std::string& text, int& height, int& width) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) return false;
  try {
    std::size_t used_h = 0, used_w = 0;
    const int h = std::stoi(text.substr(0, x), &used_h);
    const int w = std::stoi(text.substr(x + 1), &used_w);
    if (used_h != x || used_w != text.size() - x - 1 || h < 1 || w < 1) return false;
    height = h;
    width = w;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void add_train_flags(CLI::App& cmd, aucseg::cli::TrainArgs& a) {
  auto& c = a.config;
  cmd.add_option("--data", a.data, "SEGD dataset")->required();
  cmd.add_option("--out", a.out_dir, "output directory for metrics.csv and final_model.segm")
      ->required();
  cmd.add_option("--bank-out", a.bank_out, "write final bank contents as SEGD");
  cmd.add_option("--batch-size", c.batch_size)->capture_default_str();
  cmd.add_option("--max-iter", c.max_iter)->capture_default_str();
  cmd.add_option("--lr", c.base_lr, "base learning rate")->capture_default_str();
  cmd.add_option("--warmup", c.warmup_iters, "linear warmup iterations")->capture_default_str();
  cmd.add_option("--lr-floor", c.lr_floor)->capture_default_str();
  cmd.add_option("--lambda", c.lambda, "cross-entropy weight")->capture_default_str();

  cmd.add_option("--objective", a.objective, "auc (AUC + lambda*CE) or ce (CE only)")
      ->check(CLI::IsMember({"auc", "ce"}))
      ->capture_default_str();
  cmd.add_option("--surrogate", a.surrogate)->check(CLI::IsMember({"square", "hinge", "exp"}))
      ->capture_default_str();
  cmd.add_option("--mode", a.mode)->check(CLI::IsMember({"ovo", "ova"}))->capture_default_str();
  cmd.add_option("--pair-norm", a.pair_norm, "pair denominators with pasted pixels")
      ->check(CLI::IsMember({"union", "original"}))
      ->capture_default_str();
  cmd.add_option("--memory-size", c.bank.memory_size, "patches per tail class; 0 disables the bank")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_option("--sample-ratio", c.bank.sample_ratio)->capture_default_str();
  cmd.add_option("--resize-ratio", c.bank.resize_ratio)->capture_default_str();
  cmd.add_option("--bank-strategy", a.strategy)
      ->check(CLI::IsMember({"random", "fifo", "lifo", "pu"}))
      ->capture_default_str();
  cmd.add_option("--tail-fraction", c.bank.tail_fraction)->capture_default_str();
  cmd.add_option("--head-fraction", c.head_fraction)->capture_default_str();
  cmd.add_option("--holdout", c.holdout_fraction, "held-out share of images")->capture_default_str();
  cmd.add_option("--eval-every", c.eval_every)->capture_default_str();
  cmd.add_option("--max-pixels-per-class", c.max_pixels_per_class, "0 = no subsampling")
      ->capture_default_str();
  cmd.add_option("--seed", c.seed)->capture_default_str();

  cmd.final_callback([&a] {
    auto& c = a.config;
    c.use_auc = a.objective == "auc";
    c.surrogate = aucseg::parse_surrogate(a.surrogate);
    c.mode = aucseg::parse_auc_mode(a.mode);
    c.pair_norm = aucseg::parse_pair_normalization(a.pair_norm);
    c.bank.strategy = aucseg::parse_replacement_strategy(a.strategy);
    c.use_bank = c.bank.memory_size > 0;
    if (!c.use_bank) c.bank.memory_size = 1;  // keeps the unused bank config valid
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pixel-level AUC training with a tail-class memory bank"};
  app.require_subcommand(1);

  aucseg::cli::GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic long-tail dataset");
  gen_cmd->add_option("--out", gen.out, "output SEGD path")->required();
  gen_cmd->add_option("--classes", gen.config.num_classes)->capture_default_str();
  gen_cmd->add_option("--images", gen.config.images)->capture_default_str();
  std::string size = "48x48";
  gen_cmd->add_option("--size", size, "image size HxW")
      ->check(CLI::Validator(
          [](std::string& text) {
            int h = 0, w = 0;
            return parse_size(text, h, w) ? std::string{}
                                          : "expected HxW with positive integers, got '" + text + "'";
          },
          "HxW"))
      ->capture_default_str();
  gen_cmd->final_callback([&] { parse_size(size, gen.config.height, gen.config.width); });
  gen_cmd->add_option("--channels", gen.config.channels)->capture_default_str();
  gen_cmd->add_option("--zipf", gen.config.zipf_s)->capture_default_str();
  gen_cmd->add_option("--tail-presence", gen.tail_presence)->capture_default_str();
  gen_cmd->add_option("--head-presence", gen.head_presence)->capture_default_str();
  gen_cmd->add_option("--shapes", gen.config.shapes_per_class)->capture_default_str();
  gen_cmd->add_option("--noise", gen.config.feature_noise_sigma)->capture_default_str();
  gen_cmd->add_option("--seed", gen.config.seed)->capture_default_str();

  aucseg::cli::TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train the per-pixel model");
  add_train_flags(*train_cmd, tr);

  aucseg::cli::EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a dataset");
  eval_cmd->add_option("--data", ev.data)->required();
  eval_cmd->add_option("--model", ev.model)->required();
  eval_cmd->add_option("--head-fraction", ev.head_fraction)->capture_default_str();
  eval_cmd->add_option("--tail-fraction", ev.tail_fraction)->capture_default_str();

  aucseg::cli::CoverageArgs cov;
  auto* cov_cmd = app.add_subcommand("simulate-coverage", "batch size needed to see every class");
  cov_cmd->add_option("--classes", cov.classes)->capture_default_str();
  cov_cmd->add_option("--pmin", cov.pmin, "presence probability of every class")
      ->capture_default_str();
  cov_cmd->add_option("--delta", cov.delta)->capture_default_str();
  cov_cmd->add_option("--trials", cov.trials)->capture_default_str();
  cov_cmd->add_option("--seed", cov.seed)->capture_default_str();

  aucseg::cli::BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench-loss", "time naive vs fast pair losses");
  bench_cmd->add_option("--pixels", bench.pixels)->capture_default_str();
  bench_cmd->add_option("--classes", bench.classes)->capture_default_str();
  bench_cmd->add_option("--surrogate", bench.surrogate)
      ->check(CLI::IsMember({"square", "hinge", "exp"}))
      ->capture_default_str();
  bench_cmd->add_option("--repeat", bench.repeat)->capture_default_str();
  bench_cmd->add_option("--naive-limit", bench.naive_limit,
                        "largest pixel count checked with the quadratic reference")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    return fail("usage", e.what(), kExitUsage);
  } catch (const aucseg::Error& e) {
    return fail(aucseg::to_string(e.kind()), e.what(), kExitValidation);
  }

  try {
    if (gen_cmd->parsed()) aucseg::cli::run_gen_data(gen, std::cout);
    if (train_cmd->parsed()) aucseg::cli::run_train(tr, std::cout);
    if (eval_cmd->parsed()) aucseg::cli::run_eval(ev, std::cout);
    if (cov_cmd->parsed()) aucseg::cli::run_simulate_coverage(cov, std::cout);
    if (bench_cmd->parsed()) aucseg::cli::run_bench_loss(bench, std::cout);
  } catch (const aucseg::NumericalError& e) {
    return fail("numerical", e.what(), kExitNumerical);
  } catch (const aucseg::Error& e) {
    return fail(aucseg::to_string(e.kind()), e.what(), kExitValidation);
  } catch (const std::exception& e) {
    return fail("io", e.what(), kExitValidation);
  }
  std::cout.flush();
  return 0;
}
