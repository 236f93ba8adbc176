// SPDX-License-Identifier: Apache-2.0
#include "ftkit/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ftkit/errors.hpp"
#include "ftkit/format.hpp"

namespace ftkit {

NormMethod parse_norm_method(const std::string &text) {
  if (text == "min-max") return NormMethod::MinMax;
  if (text == "z-score") return NormMethod::ZScore;
  throw std::invalid_argument("unknown normalization '" + text + "'");
}

Vector TimeSeries::column(std::size_t c) const {
  if (c >= width()) throw std::out_of_range("column " + std::to_string(c) + " out of range");
  Vector out(length());
  for (std::size_t t = 0; t < length(); ++t) out[t] = values(t, c);
  return out;
}

void TimeSeries::validate() const {
  if (length() < 1 || width() < 1) throw std::invalid_argument("time series must be non-empty");
  if (column_names.size() != width())
    throw std::invalid_argument("time series needs one name per column");
  if (!norm_params.empty()) {
    if (norm_params.size() != width())
      throw std::invalid_argument("time series needs one norm parameter per column");
    for (const auto &p : norm_params)
      if (p.scale == 0.0) throw std::invalid_argument("normalization scale must be nonzero");
  }
  if (split_index && (*split_index == 0 || *split_index >= length()))
    throw std::invalid_argument("split index must lie in (0, T)");
}

TimeSeries make_series(const std::vector<Vector> &columns, std::vector<std::string> names) {
  if (columns.empty()) throw std::invalid_argument("make_series: no columns");
  const std::size_t T = columns.front().size();
  TimeSeries ts;
  ts.values = Matrix(T, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != T) throw std::invalid_argument("make_series: ragged columns");
    for (std::size_t t = 0; t < T; ++t) ts.values(t, c) = columns[c][t];
  }
  ts.column_names = std::move(names);
  ts.validate();
  return ts;
}

// ---------------------------------------------------------------------------
// simulated signals

void MixtureConfig::validate() const {
  if (num_components < 1) throw std::invalid_argument("mixture: num_components must be >= 1");
  if (!(period_min > 0.0) || !(period_min <= period_max))
    throw std::invalid_argument("mixture: need 0 < period_min <= period_max");
  if (length < 2) throw std::invalid_argument("mixture: length must be >= 2");
  if (!(noise_min >= 0.0) || !(noise_min <= noise_max))
    throw std::invalid_argument("mixture: need 0 <= noise_min <= noise_max");
}

Mixture generate_mixture(const MixtureConfig &config) {
  config.validate();
  const auto K = static_cast<std::size_t>(config.num_components);
  const auto T = static_cast<std::size_t>(config.length);
  std::mt19937_64 rng(config.seed);

  Mixture mix;
  Vector noisy(T, 0.0), clean(T, 0.0);
  std::vector<Vector> comps(K, Vector(T));
  for (std::size_t k = 0; k < K; ++k) {
    const double period =
        K == 1 ? config.period_min
               : config.period_min + (config.period_max - config.period_min) *
                                         static_cast<double>(k) / static_cast<double>(K - 1);
    mix.periods.push_back(period);
    const double amp = config.noise_min == config.noise_max
                           ? config.noise_min
                           : std::uniform_real_distribution<double>(config.noise_min,
                                                                    config.noise_max)(rng);
    mix.noise_amplitudes.push_back(amp);
    std::uniform_real_distribution<double> noise(-amp, amp);
    for (std::size_t t = 0; t < T; ++t) {
      const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / period);
      comps[k][t] = c;
      clean[t] += c;
      noisy[t] += amp == 0.0 ? c : c + noise(rng);
    }
  }
  mix.noisy = make_series({noisy}, {"noisy"});
  mix.clean = make_series({clean}, {"clean"});
  std::vector<std::string> names;
  for (std::size_t k = 0; k < K; ++k) names.push_back("component_" + std::to_string(k + 1));
  mix.components = make_series(comps, std::move(names));
  return mix;
}

// ---------------------------------------------------------------------------
// featurization

std::vector<Sample> sliding_window(const TimeSeries &series, std::size_t lags,
                                   std::size_t target_column, std::size_t horizon,
                                   const std::vector<std::size_t> &feature_columns) {
  if (lags < 1) throw std::invalid_argument("sliding_window: lags must be >= 1");
  if (horizon < 1) throw std::invalid_argument("sliding_window: horizon must be >= 1");
  if (target_column >= series.width())
    throw std::invalid_argument("sliding_window: target column out of range");
  const std::size_t T = series.length();
  if (lags + horizon > T)
    throw std::invalid_argument("sliding_window: series of length " + std::to_string(T) +
                                " is too short for " + std::to_string(lags) + " lags and horizon " +
                                std::to_string(horizon));
  std::vector<std::size_t> cols = feature_columns;
  if (cols.empty())
    for (std::size_t c = 0; c < series.width(); ++c) cols.push_back(c);
  for (auto c : cols)
    if (c >= series.width()) throw std::invalid_argument("sliding_window: feature column out of range");

  std::vector<Sample> out;
  const std::size_t count = T - lags - horizon + 1;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    Sample s;
    s.features.reserve(lags * cols.size());
    for (std::size_t row = t; row < t + lags; ++row)
      for (auto c : cols) s.features.push_back(series.values(row, c));
    s.target = series.values(t + lags + horizon - 1, target_column);
    out.push_back(std::move(s));
  }
  return out;
}

TimeSeries normalize(const TimeSeries &series, NormMethod method, std::size_t fit_rows) {
  series.validate();
  if (fit_rows > series.length())
    throw std::invalid_argument("normalize: fit_rows exceeds series length");
  TimeSeries out = series;
  out.norm_params.assign(series.width(), {});
  const std::size_t T = series.length();
  const std::size_t F = fit_rows == 0 ? T : fit_rows;
  for (std::size_t c = 0; c < series.width(); ++c) {
    const Vector all = series.column(c);
    const Vector col(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(F));
    NormParams p;
    if (method == NormMethod::MinMax) {
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      p.offset = *lo;
      p.scale = *hi - *lo;
    } else {
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(F);
      double var = 0.0;
      for (double v : col) var += (v - mean) * (v - mean);
      var /= static_cast<double>(F);
      p.offset = mean;
      p.scale = std::sqrt(var);
    }
    if (!(p.scale > 0.0)) throw DegenerateColumnError(c);
    for (std::size_t t = 0; t < T; ++t) out.values(t, c) = (all[t] - p.offset) / p.scale;
    out.norm_params[c] = p;
  }
  return out;
}

double denormalize_value(const NormParams &p, double v) { return v * p.scale + p.offset; }

TimeSeries denormalize(const TimeSeries &series) {
  if (series.norm_params.size() != series.width())
    throw std::invalid_argument("denormalize: series carries no normalization parameters");
  TimeSeries out = series;
  for (std::size_t c = 0; c < series.width(); ++c)
    for (std::size_t t = 0; t < series.length(); ++t)
      out.values(t, c) = denormalize_value(series.norm_params[c], series.values(t, c));
  out.norm_params.clear();
  return out;
}

// ---------------------------------------------------------------------------
// csv

namespace {

std::vector<std::string> split_line(const std::string &line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delim)) cells.push_back(cell);
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(s[i])) ++i;
  return s.substr(i);
}

}  // namespace

TimeSeries load_csv(const std::filesystem::path &path, bool has_header, char delimiter) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv file " + path.string());

  std::vector<std::string> names;
  std::vector<double> cells;
  std::size_t width = 0, rows = 0, line_no = 0;
  std::string line;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
      line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto parts = split_line(line, delimiter);
    if (header_pending) {
      for (auto &p : parts) names.push_back(trim(p));
      width = names.size();
      header_pending = false;
      continue;
    }
    if (width == 0) width = parts.size();
    if (parts.size() != width) throw CsvRaggedRowError(line_no, width, parts.size());
    for (std::size_t c = 0; c < parts.size(); ++c) {
      const std::string cell = trim(parts[c]);
      try {
        const double v = parse_double(cell);
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
        cells.push_back(v);
      } catch (const std::invalid_argument &) {
        throw CsvParseError(line_no, c + 1, cell);
      }
    }
    ++rows;
  }
  if (rows == 0) throw CsvEmptyError(path.string());
  if (names.empty())
    for (std::size_t c = 0; c < width; ++c) names.push_back("col" + std::to_string(c + 1));

  TimeSeries ts;
  ts.values = Matrix(rows, width, std::move(cells));
  ts.column_names = std::move(names);
  ts.validate();
  return ts;
}

// ---------------------------------------------------------------------------
// metrics

double mse(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw std::invalid_argument("mse: length mismatch");
  if (preds.empty()) throw std::invalid_argument("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(preds.size());
}

double mse(const std::vector<Vector> &preds, const std::vector<Vector> &targets) {
  if (preds.size() != targets.size()) throw std::invalid_argument("mse: length mismatch");
  Vector p, q;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    if (preds[t].size() != targets[t].size()) throw std::invalid_argument("mse: width mismatch");
    p.insert(p.end(), preds[t].begin(), preds[t].end());
    q.insert(q.end(), targets[t].begin(), targets[t].end());
  }
  return mse(p, q);
}

ConfusionAccuracy confusion_accuracy(std::span<const double> preds,
                                     std::span<const double> targets, double threshold) {
  if (preds.size() != targets.size())
    throw std::invalid_argument("confusion_accuracy: length mismatch");
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool truth = targets[i] >= threshold;
    const bool guess = preds[i] >= threshold;
    if (truth) (guess ? tp : fn)++;
    else (guess ? fp : tn)++;
  }
  if (tp + fn == 0) throw ClassAbsentError("positive");
  if (tn + fp == 0) throw ClassAbsentError("negative");
  return {static_cast<double>(tp) / static_cast<double>(tp + fn),
          static_cast<double>(tn) / static_cast<double>(tn + fp)};
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sequence");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace ftkit
