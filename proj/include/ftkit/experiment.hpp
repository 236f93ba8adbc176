// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftkit/activation.hpp"
#include "ftkit/cbp.hpp"
#include "ftkit/data.hpp"

namespace ftkit {

/// Schema violation in an experiment config. `path()` names the offending
/// field, e.g. "/train/epochs".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string &message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}
  const std::string &path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class Task {
  MixtureForecast,
  SingleNeuronFit,
  CsvForecast,
  BaselineComparison,
  ActivationStudy,
  GradCheck,  // only valid for the grad-check command
};
enum class ModelType { FT0, FT1, MP, Elman };

std::string to_string(Task task);
std::string to_string(ModelType model);

struct ModelSpec {
  ModelType type = ModelType::FT0;
  std::size_t hidden = 10;  // FT1 only
  ActivationKind activation = ActivationKind::split_tanh();
  double a = 1.0;
  double b = 1.0;
  double init_scale = 1.0;  // multiplies the initialization bounds
};

/// A periodic training curve: cos(2 pi t / P), or cos + sin when `with_sin`.
struct CurveSpec {
  bool with_sin = false;
  double period = 3.0;
  int length = 300;
  double amplitude_scale = 1.0;
};

struct MixtureSpec {
  MixtureConfig mixture;
  std::size_t lags = 1;
  std::size_t train_length = 800;  // target rows below this train
  /// Multiplies the noisy and clean series; 0 means 1 / num_components.
  double amplitude_scale = 0.0;
};

struct CsvSpec {
  std::filesystem::path path;
  bool has_header = true;
  char delimiter = ',';
  std::size_t lags = 1;
  std::size_t target_column = 0;
  std::size_t horizon = 1;
  std::optional<NormMethod> normalization = NormMethod::MinMax;
  double train_fraction = 0.8;
  std::optional<double> threshold;  // default: training-target median
};

/// Random sequence used by the gradient check.
struct GradCheckSpec {
  std::size_t inputs = 3;
  std::size_t outputs = 2;
  std::size_t length = 10;
  double h = 1e-5;
  double tolerance = 1e-4;
};

struct ExperimentConfig {
  Task task = Task::MixtureForecast;
  ModelSpec model;
  TrainConfig train;
  MixtureSpec mixture;
  CurveSpec curve;
  CsvSpec csv;
  GradCheckSpec grad_check;
  std::filesystem::path output_dir = "out";
};

ExperimentConfig parse_experiment(const nlohmann::json &doc);
/// Throws ConfigError with path "" when the file is missing or not JSON.
/// A relative csv path is resolved against the config file's directory.
ExperimentConfig load_experiment(const std::filesystem::path &path);

/// A dataset plus the timestamp of its first target, for output files.
struct PreparedData {
  SequenceDataset dataset;
  std::size_t t0 = 0;
};

/// Noisy lags in, clean next value out. Scaled by amplitude_scale.
PreparedData make_mixture_dataset(const MixtureSpec &spec);
/// x_t = y_{t-1}, target y_t, every step in the training window.
PreparedData make_curve_dataset(const CurveSpec &spec);

FTNetwork build_network(const ModelSpec &spec, std::size_t inputs, std::size_t outputs);

struct ExperimentResult {
  nlohmann::ordered_json metrics;
  std::map<std::string, std::string> files;  // name -> contents
};

/// Runs the task. Throws NumericOverflow (with epoch) or ConfigError.
ExperimentResult run_experiment(const ExperimentConfig &config);

/// Writes metrics.json and every trace under `dir`, each atomically.
void write_outputs(const ExperimentResult &result, const std::filesystem::path &dir);

struct GradCheckResult {
  std::string model;
  GradientComparison full_vs_fd;
  bool passed = false;
  /// Max |difference| between the CBP W gradient and static
  /// back-propagation; set when b == 0.
  std::optional<double> static_backprop_diff;
  /// Max |difference| between diagonal and full mode; set when every layer
  /// has one unit.
  std::optional<double> diagonal_diff;
};

/// Compares full-mode CBP with central differences on a seeded random
/// sequence. Throws ConfigError for anything but a single-layer FT model.
GradCheckResult run_grad_check(const ExperimentConfig &config);

/// Static back-propagation gradient of E with respect to W for a
/// single-layer network whose b is zero, accumulated in the same order as
/// CBP.
Matrix static_backprop_gradient(FTNetwork &net, const std::vector<Vector> &inputs,
                                const std::vector<Vector> &targets);

/// CSV of the configured data source: t,noisy,clean,component_k for a
/// mixture, t,y for a curve.
std::string generated_data_csv(const ExperimentConfig &config);

/// Seed precedence: explicit override, then FTKIT_SEED, then the config.
std::uint64_t resolve_seed(std::uint64_t configured, std::optional<std::uint64_t> override_seed);

}  // namespace ftkit
