// SPDX-License-Identifier: Apache-2.0
#include "ftkit/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ftkit/activation.hpp"
#include "ftkit/data.hpp"
#include "ftkit/errors.hpp"

namespace ftkit {

double apply(RealActivation f, double x) {
  return f == RealActivation::Tanh ? std::tanh(x) : sigmoid(x);
}

double derivative(RealActivation f, double x) {
  if (f == RealActivation::Tanh) {
    const double t = std::tanh(x);
    return 1.0 - t * t;
  }
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

std::string to_string(RealActivation f) { return f == RealActivation::Tanh ? "tanh" : "sigmoid"; }

RealActivation parse_real_activation(const std::string &text) {
  if (text == "tanh") return RealActivation::Tanh;
  if (text == "sigmoid") return RealActivation::Sigmoid;
  throw std::invalid_argument("baselines support only tanh or sigmoid, got '" + text + "'");
}

namespace {

void fill_uniform(Matrix &m, double bound, std::mt19937_64 &rng) {
  if (!(bound > 0.0) || !std::isfinite(bound))
    throw std::invalid_argument("initialize: scale must be positive and finite");
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double &v : m.flat()) v = dist(rng);
}

void check_finite(double v, const char *what) {
  if (!std::isfinite(v)) throw NumericOverflow(std::string(what) + ": non-finite value");
}

}  // namespace

// ---------------------------------------------------------------------------
// MP

MPNeuronLayer::MPNeuronLayer(std::size_t inputs, std::size_t units, RealActivation act)
    : W(units, inputs), theta(units, 0.0), activation(act) {}

void MPNeuronLayer::validate() const {
  if (W.rows() == 0 || W.cols() == 0) throw std::invalid_argument("MP layer W must be non-empty");
  if (theta.size() != W.rows())
    throw std::invalid_argument("MP layer needs one threshold per unit");
}

void MPNeuronLayer::initialize(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  fill_uniform(W, scale * 0.5 / std::sqrt(static_cast<double>(inputs())), rng);
  std::fill(theta.begin(), theta.end(), 0.0);
}

Vector mp_forward(const MPNeuronLayer &layer, std::span<const double> x) {
  if (x.size() != layer.inputs())
    throw std::invalid_argument("mp_forward: expected input of length " +
                                std::to_string(layer.inputs()) + ", got " +
                                std::to_string(x.size()));
  Vector y(layer.units());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = apply(layer.activation, dot(layer.W.row(i), x) - layer.theta[i]);
    check_finite(y[i], "mp_forward");
  }
  return y;
}

// ---------------------------------------------------------------------------
// Elman

ElmanUnit::ElmanUnit(std::size_t inputs, std::size_t units, RealActivation act)
    : W(units, inputs), V(units, units), activation(act), s_state(units, 0.0), s0(units, 0.0) {}

void ElmanUnit::validate() const {
  if (W.rows() == 0 || W.cols() == 0) throw std::invalid_argument("Elman W must be non-empty");
  if (V.rows() != W.rows() || V.cols() != W.rows())
    throw std::invalid_argument("Elman V must be square with side " + std::to_string(W.rows()));
  if (s_state.size() != W.rows() || s0.size() != W.rows())
    throw std::invalid_argument("Elman state length must equal unit count");
}

void ElmanUnit::initialize(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  fill_uniform(W, scale * 0.5 / std::sqrt(static_cast<double>(inputs())), rng);
  fill_uniform(V, scale * 0.5 / std::sqrt(static_cast<double>(units())), rng);
}

Vector elman_step(ElmanUnit &unit, std::span<const double> x) {
  if (x.size() != unit.inputs())
    throw std::invalid_argument("elman_step: expected input of length " +
                                std::to_string(unit.inputs()) + ", got " +
                                std::to_string(x.size()));
  if (unit.s_state.size() != unit.units())
    throw std::invalid_argument("elman_step: state length mismatch");
  Vector s(unit.units());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double ws = dot(unit.W.row(i), x);
    const double vr = dot(unit.V.row(i), unit.s_state);
    s[i] = apply(unit.activation, ws + vr);
    check_finite(s[i], "elman_step");
  }
  unit.s_state = s;
  return s;
}

// ---------------------------------------------------------------------------
// training

namespace {

void clip(std::span<double> g, double clip_norm) {
  if (clip_norm <= 0.0) return;
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > clip_norm)
    for (double &v : g) v *= clip_norm / norm;
}

void descend(std::span<double> params, std::span<const double> grad, double eta) {
  for (double v : grad)
    if (!std::isfinite(v)) throw NumericOverflow("non-finite gradient");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= eta * grad[i];
}

// Epoch loop shared by both baselines. `epoch` returns E and fills the flat
// gradient; `update` applies it; `predict` replays a window from reset.
template <class Epoch, class Update, class Predict>
TrainReport run_training(const std::string &name, const SequenceDataset &data,
                         const TrainConfig &config, Epoch epoch, Update update,
                         Predict predict) {
  config.validate();
  data.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.model = name;
  report.config = config;
  const auto inputs = data.train_inputs();
  const auto targets = data.train_targets();
  for (int e = 0; e < config.epochs; ++e) {
    try {
      Vector grad;
      const double loss = epoch(inputs, targets, grad);
      if (!std::isfinite(loss)) throw NumericOverflow("non-finite training loss");
      clip(grad, config.clip_norm);
      update(grad);
      report.epoch_loss.push_back(loss);
    } catch (const NumericOverflow &err) {
      throw NumericOverflow(err.what(), e);
    }
    if (config.track_test_mse && data.train_length < data.size()) {
      const auto all = predict(data.inputs);
      std::vector<Vector> tail(all.begin() + static_cast<std::ptrdiff_t>(data.train_length),
                               all.end());
      report.test_mse_curve.push_back(mse(tail, data.test_targets()));
    }
  }
  const auto all = predict(data.inputs);
  report.train_predictions.assign(all.begin(),
                                  all.begin() + static_cast<std::ptrdiff_t>(data.train_length));
  report.test_predictions.assign(all.begin() + static_cast<std::ptrdiff_t>(data.train_length),
                                 all.end());
  report.train_mse = mse(report.train_predictions, targets);
  if (!report.test_predictions.empty())
    report.test_mse = mse(report.test_predictions, data.test_targets());
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

TrainReport train_baseline(MPNeuronLayer &model, const SequenceDataset &data,
                           const TrainConfig &config) {
  model.validate();
  const std::size_t n = model.units(), m = model.inputs();
  // gradient layout: W row-major, then theta
  auto epoch = [&](const std::vector<Vector> &in, const std::vector<Vector> &tg, Vector &grad) {
    grad.assign(n * m + n, 0.0);
    double sq = 0.0;
    for (std::size_t t = 0; t < in.size(); ++t) {
      if (in[t].size() != m || tg[t].size() != n)
        throw std::invalid_argument("MP training: width mismatch at t=" + std::to_string(t));
      for (std::size_t i = 0; i < n; ++i) {
        const double z = dot(model.W.row(i), in[t]) - model.theta[i];
        const double d = apply(model.activation, z) - tg[t][i];
        sq += d * d;
        const double g = d * derivative(model.activation, z);
        for (std::size_t k = 0; k < m; ++k) grad[i * m + k] += g * in[t][k];
        grad[n * m + i] -= g;
      }
    }
    return 0.5 * sq;
  };
  auto update = [&](const Vector &grad) {
    descend(model.W.flat(), std::span<const double>(grad).first(n * m), config.learning_rate);
    descend(model.theta, std::span<const double>(grad).subspan(n * m), config.learning_rate);
  };
  auto predict = [&](const std::vector<Vector> &in) {
    std::vector<Vector> out;
    for (const auto &x : in) out.push_back(mp_forward(model, x));
    return out;
  };
  return run_training("mp size(" + std::to_string(m) + "," + std::to_string(n) + ")", data,
                      config, epoch, update, predict);
}

TrainReport train_baseline(ElmanUnit &model, const SequenceDataset &data,
                           const TrainConfig &config) {
  model.validate();
  const std::size_t n = model.units(), m = model.inputs();
  const std::size_t nw = n * m, nv = n * n;
  // P(i, p) = d s(i) / d param p, params laid out as W then V
  auto epoch = [&](const std::vector<Vector> &in, const std::vector<Vector> &tg, Vector &grad) {
    grad.assign(nw + nv, 0.0);
    Matrix P(n, nw + nv), next(n, nw + nv);
    model.reset();
    double sq = 0.0;
    for (std::size_t t = 0; t < in.size(); ++t) {
      if (tg[t].size() != n)
        throw std::invalid_argument("Elman training: width mismatch at t=" + std::to_string(t));
      const Vector s_prev = model.s_state;
      Vector z(n);
      for (std::size_t i = 0; i < n; ++i)
        z[i] = dot(model.W.row(i), in[t]) + dot(model.V.row(i), s_prev);
      const Vector s = elman_step(model, in[t]);
      for (std::size_t i = 0; i < n; ++i) {
        const double fp = derivative(model.activation, z[i]);
        for (std::size_t p = 0; p < nw + nv; ++p) {
          double rec = 0.0;
          for (std::size_t h = 0; h < n; ++h) rec += model.V(i, h) * P(h, p);
          double direct = 0.0;
          if (p < nw) {
            if (p / m == i) direct = in[t][p % m];
          } else if ((p - nw) / n == i) {
            direct = s_prev[(p - nw) % n];
          }
          next(i, p) = fp * (direct + rec);
        }
      }
      P = next;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = s[i] - tg[t][i];
        sq += d * d;
        for (std::size_t p = 0; p < nw + nv; ++p) grad[p] += d * P(i, p);
      }
    }
    return 0.5 * sq;
  };
  auto update = [&](const Vector &grad) {
    descend(model.W.flat(), std::span<const double>(grad).first(nw), config.learning_rate);
    descend(model.V.flat(), std::span<const double>(grad).subspan(nw), config.learning_rate);
  };
  auto predict = [&](const std::vector<Vector> &in) {
    model.reset();
    std::vector<Vector> out;
    for (const auto &x : in) out.push_back(elman_step(model, x));
    return out;
  };
  return run_training("elman size(" + std::to_string(m) + "," + std::to_string(n) + ")", data,
                      config, epoch, update, predict);
}

}  // namespace ftkit
