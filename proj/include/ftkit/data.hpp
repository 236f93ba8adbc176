// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ftkit/matrix.hpp"

namespace ftkit {

struct NormParams {
  double offset = 0.0;
  double scale = 1.0;
  friend bool operator==(const NormParams &, const NormParams &) = default;
};

enum class NormMethod { MinMax, ZScore };

NormMethod parse_norm_method(const std::string &text);

/// T x d table of observations, rows in time order.
struct TimeSeries {
  Matrix values;
  std::vector<std::string> column_names;
  std::vector<NormParams> norm_params;  // empty until normalized
  std::optional<std::size_t> split_index;

  std::size_t length() const noexcept { return values.rows(); }
  std::size_t width() const noexcept { return values.cols(); }
  Vector column(std::size_t c) const;

  /// Throws std::invalid_argument when T < 1, d < 1, names/params do not
  /// match d, a scale is zero, or the split is outside (0, T).
  void validate() const;
};

TimeSeries make_series(const std::vector<Vector> &columns, std::vector<std::string> names);

struct MixtureConfig {
  int num_components = 5;
  double period_min = 3.0;
  double period_max = 7.0;
  int length = 900;
  double noise_min = 0.15;
  double noise_max = 0.30;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Mixture {
  TimeSeries noisy;       // one column
  TimeSeries clean;       // one column
  TimeSeries components;  // num_components columns, noise-free
  std::vector<double> noise_amplitudes;
  std::vector<double> periods;
};

/// Sum of cos(2 pi t / P_k) over integer t in [0, length), periods evenly
/// spaced over [period_min, period_max]. Each component gets its own noise
/// amplitude A_k ~ U[noise_min, noise_max] and per-step noise U[-A_k, A_k].
Mixture generate_mixture(const MixtureConfig &config);

struct Sample {
  Vector features;
  double target = 0.0;
};

/// Sample t uses rows [t, t + lags) as features (flattened row-major over
/// the selected columns) and row t + lags + horizon - 1 of target_column as
/// the target. Yields T - lags - horizon + 1 samples. `feature_columns`
/// defaults to every column.
std::vector<Sample> sliding_window(const TimeSeries &series, std::size_t lags,
                                   std::size_t target_column, std::size_t horizon = 1,
                                   const std::vector<std::size_t> &feature_columns = {});

/// Per-column transform; parameters are stored on the result. They are
/// fitted on the first `fit_rows` rows (0 means all rows) and applied to
/// every row. Throws DegenerateColumnError for a constant column.
TimeSeries normalize(const TimeSeries &series, NormMethod method, std::size_t fit_rows = 0);
TimeSeries denormalize(const TimeSeries &series);
double denormalize_value(const NormParams &p, double v);

/// Rows become timestamps in file order. No quoting support.
TimeSeries load_csv(const std::filesystem::path &path, bool has_header = true,
                    char delimiter = ',');

double mse(std::span<const double> preds, std::span<const double> targets);
double mse(const std::vector<Vector> &preds, const std::vector<Vector> &targets);

struct ConfusionAccuracy {
  double tpr = 0.0;
  double tnr = 0.0;
};

/// Binarizes both sequences at `threshold` (value >= threshold is positive).
/// Throws ClassAbsentError when the targets contain no positives or no
/// negatives.
ConfusionAccuracy confusion_accuracy(std::span<const double> preds,
                                     std::span<const double> targets, double threshold);

double median(std::vector<double> values);

}  // namespace ftkit
