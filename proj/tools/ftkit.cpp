// SPDX-License-Identifier: Apache-2.0
// ftkit: run FT network experiments from JSON configs.
//
// Exit codes: 0 success, 1 runtime failure (or a failed gradient check),
// 2 config error, 3 numeric overflow during training.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ftkit/errors.hpp"
#include "ftkit/experiment.hpp"
#include "ftkit/format.hpp"
#include "ftkit/io.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

ftkit::ExperimentConfig load(const std::string &path, std::optional<std::uint64_t> seed) {
  if (!std::filesystem::exists(path)) throw ftkit::ConfigError("", "config file not found: " + path);
  auto cfg = ftkit::load_experiment(path);
  cfg.train.seed = ftkit::resolve_seed(cfg.train.seed, seed);
  return cfg;
}

int cmd_run(const std::string &config, const std::string &out, std::optional<std::uint64_t> seed,
            bool timing) {
  auto cfg = load(config, seed);
  const std::filesystem::path dir = out.empty() ? cfg.output_dir : std::filesystem::path(out);
  const auto start = std::chrono::steady_clock::now();
  const auto result = ftkit::run_experiment(cfg);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  ftkit::write_outputs(result, dir);
  std::cout << "wrote " << dir.string() << "/metrics.json\n";
  if (timing) std::cerr << "elapsed " << elapsed.count() << " s\n";
  return 0;
}

int cmd_grad_check(const std::string &config, std::optional<std::uint64_t> seed) {
  const auto cfg = load(config, seed);
  const auto res = ftkit::run_grad_check(cfg);
  std::cout << "model " << res.model << '\n'
            << "entries compared " << res.full_vs_fd.compared << '\n'
            << "max relative error W " << ftkit::format_double(res.full_vs_fd.max_rel_error_W) << '\n'
            << "max relative error V " << ftkit::format_double(res.full_vs_fd.max_rel_error_V) << '\n';
  if (res.static_backprop_diff)
    std::cout << "b=0 difference vs static backprop " << ftkit::format_double(*res.static_backprop_diff)
              << '\n';
  if (res.diagonal_diff)
    std::cout << "diagonal vs full difference " << ftkit::format_double(*res.diagonal_diff) << '\n';
  std::cout << (res.passed ? "PASS" : "FAIL") << " (tolerance "
            << ftkit::format_double(cfg.grad_check.tolerance) << ")\n";
  return res.passed ? 0 : 1;
}

int cmd_gen_data(const std::string &config, const std::string &out) {
  const auto cfg = load(config, std::nullopt);
  const std::filesystem::path path(out);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  ftkit::write_file_atomic(path, ftkit::generated_data_csv(cfg));
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Flexible Transmitter network toolkit"};
  app.require_subcommand(1);

  std::string config, out;
  std::optional<std::uint64_t> seed;
  bool timing = false;

  auto *run = app.add_subcommand("run", "train and evaluate the experiment in a config file");
  run->add_option("--config", config, "experiment config (JSON)")->required();
  run->add_option("--out", out, "output directory (overrides output_dir)");
  run->add_option("--seed", seed, "initialization seed (overrides FTKIT_SEED and the config)");
  run->add_flag("--timing", timing, "print wall-clock time to stderr");

  auto *grad = app.add_subcommand("grad-check", "compare CBP gradients with finite differences");
  grad->add_option("--config", config, "experiment config (JSON)")->required();
  grad->add_option("--seed", seed, "initialization seed");

  auto *gen = app.add_subcommand("gen-data", "write the configured data source as CSV");
  gen->add_option("--config", config, "experiment config (JSON)")->required();
  gen->add_option("--out", out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(config, out, seed, timing);
    if (*grad) return cmd_grad_check(config, seed);
    return cmd_gen_data(config, out);
  } catch (const ftkit::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ftkit::NumericOverflow &e) {
    std::cerr << "numeric overflow at epoch " << e.epoch() << ": " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
