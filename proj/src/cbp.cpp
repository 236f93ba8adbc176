// SPDX-License-Identifier: Apache-2.0
#include "ftkit/cbp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ftkit/data.hpp"
#include "ftkit/errors.hpp"

namespace ftkit {

std::string to_string(GradientMode mode) {
  return mode == GradientMode::Full ? "full" : "diagonal";
}

GradientMode parse_gradient_mode(const std::string &text) {
  if (text == "full") return GradientMode::Full;
  if (text == "diagonal") return GradientMode::Diagonal;
  throw std::invalid_argument("unknown gradient mode '" + text + "'");
}

// ---------------------------------------------------------------------------
// state containers

LayerSensitivity::LayerSensitivity(std::size_t units, std::size_t inputs)
    : units_(units),
      inputs_(inputs),
      dr_dW_(units * units * inputs, 0.0),
      dr_dV_(units * units * units, 0.0) {}

void LayerSensitivity::zero() {
  std::fill(dr_dW_.begin(), dr_dW_.end(), 0.0);
  std::fill(dr_dV_.begin(), dr_dV_.end(), 0.0);
}

bool LayerSensitivity::all_zero() const {
  const auto zero = [](double v) { return v == 0.0; };
  return std::all_of(dr_dW_.begin(), dr_dW_.end(), zero) &&
         std::all_of(dr_dV_.begin(), dr_dV_.end(), zero);
}

SensitivityState::SensitivityState(const FTNetwork &net, GradientMode mode) : mode_(mode) {
  for (const auto &layer : net.layers()) layers_.emplace_back(layer.units(), layer.inputs());
}

void SensitivityState::zero() {
  for (auto &l : layers_) l.zero();
}

bool SensitivityState::all_zero() const {
  return std::all_of(layers_.begin(), layers_.end(),
                     [](const LayerSensitivity &l) { return l.all_zero(); });
}

bool SensitivityState::off_diagonal_zero() const {
  for (const auto &l : layers_) {
    for (std::size_t i = 0; i < l.units(); ++i)
      for (std::size_t j = 0; j < l.units(); ++j) {
        if (i == j) continue;
        for (std::size_t k = 0; k < l.inputs(); ++k)
          if (l.dW(i, j, k) != 0.0) return false;
        for (std::size_t h = 0; h < l.units(); ++h)
          if (l.dV(i, j, h) != 0.0) return false;
      }
  }
  return true;
}

GradientAccumulator::GradientAccumulator(const FTNetwork &net) {
  for (const auto &layer : net.layers())
    layers_.push_back({Matrix(layer.units(), layer.inputs()),
                       Matrix(layer.units(), layer.units())});
}

void GradientAccumulator::zero() {
  for (auto &g : layers_) {
    g.gW.fill(0.0);
    g.gV.fill(0.0);
  }
}

bool GradientAccumulator::all_finite() const {
  const auto finite = [](double v) { return std::isfinite(v); };
  for (const auto &g : layers_)
    if (!std::all_of(g.gW.flat().begin(), g.gW.flat().end(), finite) ||
        !std::all_of(g.gV.flat().begin(), g.gV.flat().end(), finite))
      return false;
  return true;
}

double GradientAccumulator::norm() const {
  double sq = 0.0;
  for (const auto &g : layers_) {
    for (double v : g.gW.flat()) sq += v * v;
    for (double v : g.gV.flat()) sq += v * v;
  }
  return std::sqrt(sq);
}

void GradientAccumulator::scale(double factor) {
  for (auto &g : layers_) {
    for (double &v : g.gW.flat()) v *= factor;
    for (double &v : g.gV.flat()) v *= factor;
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(clip_norm >= 0.0)) throw std::invalid_argument("clip_norm must be >= 0");
}

namespace {

std::vector<Vector> slice(const std::vector<Vector> &v, std::size_t from, std::size_t to) {
  return {v.begin() + static_cast<std::ptrdiff_t>(from),
          v.begin() + static_cast<std::ptrdiff_t>(to)};
}

}  // namespace

std::vector<Vector> SequenceDataset::train_inputs() const { return slice(inputs, 0, train_length); }
std::vector<Vector> SequenceDataset::train_targets() const { return slice(targets, 0, train_length); }
std::vector<Vector> SequenceDataset::test_inputs() const {
  return slice(inputs, train_length, inputs.size());
}
std::vector<Vector> SequenceDataset::test_targets() const {
  return slice(targets, train_length, targets.size());
}

void SequenceDataset::validate() const {
  if (inputs.empty()) throw std::invalid_argument("dataset is empty");
  if (inputs.size() != targets.size())
    throw std::invalid_argument("dataset inputs and targets differ in length");
  if (train_length == 0 || train_length > inputs.size())
    throw std::invalid_argument("dataset training window must be within (0, size]");
}

// ---------------------------------------------------------------------------
// per-timestamp pieces

double compute_loss(const std::vector<Vector> &preds, const std::vector<Vector> &targets) {
  if (preds.size() != targets.size())
    throw std::invalid_argument("compute_loss: sequence lengths differ");
  double e = 0.0;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    if (preds[t].size() != targets[t].size())
      throw std::invalid_argument("compute_loss: width mismatch at t=" + std::to_string(t));
    for (std::size_t i = 0; i < preds[t].size(); ++i) {
      const double d = preds[t][i] - targets[t][i];
      e += d * d;
    }
  }
  return 0.5 * e;
}

Vector output_delta(std::span<const double> y, std::span<const double> target) {
  if (y.size() != target.size()) throw std::invalid_argument("output_delta: width mismatch");
  Vector d(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i] - target[i];
  return d;
}

namespace {

double real_slope(const ActivationKind &act, double alpha, double beta) {
  return activate_derivative(act, alpha, Channel::Real, is_active(act, {alpha, beta}));
}

double imag_slope(const ActivationKind &act, double alpha, double beta) {
  return activate_derivative(act, beta, Channel::Imag, is_active(act, {alpha, beta}));
}

void check_step_shapes(const FTLayer &layer, std::span<const double> s_prev,
                       const LayerStep &step, const LayerSensitivity &sens) {
  const std::size_t n = layer.units();
  if (s_prev.size() != layer.inputs() || step.alpha.size() != n || step.beta.size() != n ||
      step.r_prev.size() != n || sens.units() != n || sens.inputs() != layer.inputs())
    throw std::invalid_argument("cbp: shape mismatch between layer, step and sensitivities");
}

}  // namespace

Vector backprop_delta(const FTLayer &layer_above, std::span<const double> delta_above,
                      std::span<const double> alpha_above,
                      std::span<const double> beta_above) {
  const std::size_t n = layer_above.units();
  if (delta_above.size() != n || alpha_above.size() != n || beta_above.size() != n)
    throw std::invalid_argument("backprop_delta: shape mismatch");
  Vector g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = delta_above[i] *
           real_slope(layer_above.activation, alpha_above[i], beta_above[i]);
  Vector out(layer_above.inputs());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += layer_above.W(i, k) * g[i];
    out[k] = layer_above.a * sum;
  }
  return out;
}

// In both routines below the recurrent sum runs over row i of V, the row that
// feeds unit i. Diagonal mode keeps only i == j and, inside the sum, h == j.
// With a single unit the two modes execute the same arithmetic.

void accumulate_gradients(const FTLayer &layer, std::span<const double> delta,
                          std::span<const double> s_prev, const LayerStep &step,
                          const LayerSensitivity &sens, LayerGradient &grad,
                          GradientMode mode) {
  check_step_shapes(layer, s_prev, step, sens);
  const std::size_t n = layer.units();
  const std::size_t m = layer.inputs();
  if (delta.size() != n || !grad.gW.same_shape(layer.W) || !grad.gV.same_shape(layer.V))
    throw std::invalid_argument("accumulate_gradients: shape mismatch");
  const double a = layer.a, b = layer.b;
  const bool full = mode == GradientMode::Full;

  Vector g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = delta[i] * real_slope(layer.activation, step.alpha[i], step.beta[i]);

  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t i_lo = full ? 0 : j, i_hi = full ? n : j + 1;
    for (std::size_t k = 0; k < m; ++k) {
      double sum = 0.0;
      for (std::size_t i = i_lo; i < i_hi; ++i) {
        double rec = 0.0;
        if (full) {
          for (std::size_t h = 0; h < n; ++h) rec += layer.V(i, h) * sens.dW(h, j, k);
        } else {
          rec += layer.V(i, j) * sens.dW(j, j, k);
        }
        const double direct = i == j ? a * s_prev[k] : 0.0;
        sum += g[i] * (direct - b * rec);
      }
      grad.gW(j, k) += sum;
    }
    for (std::size_t h = 0; h < n; ++h) {
      double sum = 0.0;
      for (std::size_t i = i_lo; i < i_hi; ++i) {
        double rec = 0.0;
        if (full) {
          for (std::size_t q = 0; q < n; ++q) rec += layer.V(i, q) * sens.dV(q, j, h);
        } else {
          rec += layer.V(i, j) * sens.dV(j, j, h);
        }
        const double direct = i == j ? step.r_prev[h] : 0.0;
        sum += g[i] * (-b * (direct + rec));
      }
      grad.gV(j, h) += sum;
    }
  }
}

void advance_sensitivities(const FTLayer &layer, std::span<const double> s_prev,
                           const LayerStep &step, LayerSensitivity &sens,
                           GradientMode mode) {
  check_step_shapes(layer, s_prev, step, sens);
  const std::size_t n = layer.units();
  const std::size_t m = layer.inputs();
  const double a = layer.a, b = layer.b;
  const LayerSensitivity prev = sens;

  Vector p(n);
  for (std::size_t i = 0; i < n; ++i)
    p[i] = imag_slope(layer.activation, step.alpha[i], step.beta[i]);

  if (mode == GradientMode::Full) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < m; ++k) {
          double rec = 0.0;
          for (std::size_t h = 0; h < n; ++h) rec += layer.V(i, h) * prev.dW(h, j, k);
          const double direct = i == j ? b * s_prev[k] : 0.0;
          sens.dW(i, j, k) = p[i] * (direct + a * rec);
        }
        for (std::size_t h = 0; h < n; ++h) {
          double rec = 0.0;
          for (std::size_t q = 0; q < n; ++q) rec += layer.V(i, q) * prev.dV(q, j, h);
          const double direct = i == j ? step.r_prev[h] : 0.0;
          sens.dV(i, j, h) = p[i] * (a * (direct + rec));
        }
      }
    return;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      double rec = 0.0;
      rec += layer.V(i, i) * prev.dW(i, i, k);
      sens.dW(i, i, k) = p[i] * (b * s_prev[k] + a * rec);
    }
    for (std::size_t h = 0; h < n; ++h) {
      double rec = 0.0;
      rec += layer.V(i, i) * prev.dV(i, i, h);
      sens.dV(i, i, h) = p[i] * (a * (step.r_prev[h] + rec));
    }
  }
}

// ---------------------------------------------------------------------------
// sequence level

namespace {

void check_sequence(const FTNetwork &net, const std::vector<Vector> &inputs,
                    const std::vector<Vector> &targets) {
  if (inputs.size() != targets.size())
    throw std::invalid_argument("inputs and targets differ in length");
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (inputs[t].size() != net.input_width())
      throw std::invalid_argument("input width mismatch at t=" + std::to_string(t));
    if (targets[t].size() != net.output_width())
      throw std::invalid_argument("target width mismatch at t=" + std::to_string(t));
  }
}

/// Core CBP sweep shared by cbp_gradient and the trainer. Leaves the
/// network's state at the end of the sequence.
double cbp_sweep(FTNetwork &net, const std::vector<Vector> &inputs,
                 const std::vector<Vector> &targets, SensitivityState &sens,
                 GradientAccumulator &grad) {
  check_sequence(net, inputs, targets);
  const std::size_t depth = net.depth();
  const GradientMode mode = sens.mode();
  reset_state(net);
  sens.zero();
  grad.zero();

  double sq = 0.0;
  std::vector<Vector> delta(depth);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto steps = network_forward_trace(net, inputs[t]);
    const Vector &y = steps.back().s;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - targets[t][i];
      sq += d * d;
    }

    delta[depth - 1] = output_delta(y, targets[t]);
    for (std::size_t l = depth - 1; l > 0; --l)
      delta[l - 1] = backprop_delta(net.layer(l), delta[l], steps[l].alpha, steps[l].beta);

    for (std::size_t l = 0; l < depth; ++l) {
      const std::span<const double> s_prev =
          l == 0 ? std::span<const double>(inputs[t]) : std::span<const double>(steps[l - 1].s);
      accumulate_gradients(net.layer(l), delta[l], s_prev, steps[l], sens.layer(l),
                           grad.layer(l), mode);
      advance_sensitivities(net.layer(l), s_prev, steps[l], sens.layer(l), mode);
    }
  }
  return 0.5 * sq;
}

}  // namespace

GradientAccumulator cbp_gradient(FTNetwork &net, const std::vector<Vector> &inputs,
                                 const std::vector<Vector> &targets, GradientMode mode,
                                 double *loss) {
  SensitivityState sens(net, mode);
  GradientAccumulator grad(net);
  const double e = cbp_sweep(net, inputs, targets, sens, grad);
  if (loss) *loss = e;
  return grad;
}

double sequence_loss(FTNetwork &net, const std::vector<Vector> &inputs,
                     const std::vector<Vector> &targets) {
  check_sequence(net, inputs, targets);
  return compute_loss(replay(net, inputs), targets);
}

GradientAccumulator finite_difference_gradient(const FTNetwork &net,
                                               const std::vector<Vector> &inputs,
                                               const std::vector<Vector> &targets,
                                               double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be > 0");
  GradientAccumulator grad(net);
  const auto probe = [&](std::size_t l, bool recurrent, std::size_t idx) {
    FTNetwork plus = net;
    FTNetwork minus = net;
    auto &wp = recurrent ? plus.layer(l).V : plus.layer(l).W;
    auto &wm = recurrent ? minus.layer(l).V : minus.layer(l).W;
    wp.flat()[idx] += h;
    wm.flat()[idx] -= h;
    return (sequence_loss(plus, inputs, targets) - sequence_loss(minus, inputs, targets)) /
           (2.0 * h);
  };
  for (std::size_t l = 0; l < net.depth(); ++l) {
    auto &g = grad.layer(l);
    for (std::size_t idx = 0; idx < g.gW.size(); ++idx) g.gW.flat()[idx] = probe(l, false, idx);
    for (std::size_t idx = 0; idx < g.gV.size(); ++idx) g.gV.flat()[idx] = probe(l, true, idx);
  }
  return grad;
}

void sgd_update(FTLayer &layer, const LayerGradient &grad, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("sgd_update: eta must be > 0");
  if (!grad.gW.same_shape(layer.W) || !grad.gV.same_shape(layer.V))
    throw std::invalid_argument("sgd_update: gradient shape mismatch");
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(grad.gW.flat().begin(), grad.gW.flat().end(), finite) ||
      !std::all_of(grad.gV.flat().begin(), grad.gV.flat().end(), finite))
    throw NumericOverflow("sgd_update: non-finite gradient");
  auto w = layer.W.flat();
  auto gw = grad.gW.flat();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * gw[i];
  auto v = layer.V.flat();
  auto gv = grad.gV.flat();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= eta * gv[i];
}

GradientComparison compare_gradients(const GradientAccumulator &x,
                                     const GradientAccumulator &y, double floor) {
  if (x.depth() != y.depth()) throw std::invalid_argument("compare_gradients: depth mismatch");
  GradientComparison cmp;
  const auto scan = [&](const Matrix &p, const Matrix &q, double &worst) {
    if (!p.same_shape(q)) throw std::invalid_argument("compare_gradients: shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double u = p.flat()[i], v = q.flat()[i];
      const double mag = std::max(std::abs(u), std::abs(v));
      if (mag <= floor) continue;
      ++cmp.compared;
      worst = std::max(worst, std::abs(u - v) / mag);
    }
  };
  for (std::size_t l = 0; l < x.depth(); ++l) {
    scan(x.layer(l).gW, y.layer(l).gW, cmp.max_rel_error_W);
    scan(x.layer(l).gV, y.layer(l).gV, cmp.max_rel_error_V);
  }
  return cmp;
}

// ---------------------------------------------------------------------------
// trainer

Trainer::Trainer(FTNetwork &net, TrainConfig config)
    : net_(net), config_(config), sens_(net, config.gradient_mode), grad_(net) {
  config_.validate();
  if (config_.r0 == InitialState::Zeros)
    for (auto &layer : net_.layers()) std::fill(layer.r0.begin(), layer.r0.end(), 0.0);
}

double Trainer::run_epoch(const std::vector<Vector> &inputs, const std::vector<Vector> &targets) {
  try {
    const double loss = cbp_sweep(net_, inputs, targets, sens_, grad_);
    if (!std::isfinite(loss)) throw NumericOverflow("non-finite training loss");
    if (config_.clip_norm > 0.0) {
      const double norm = grad_.norm();
      if (norm > config_.clip_norm) grad_.scale(config_.clip_norm / norm);
    }
    for (std::size_t l = 0; l < net_.depth(); ++l)
      sgd_update(net_.layer(l), grad_.layer(l), config_.learning_rate);
    ++epoch_;
    return loss;
  } catch (const NumericOverflow &e) {
    sens_.zero();
    throw NumericOverflow(e.what(), epoch_);
  }
}

void Trainer::evaluate(const SequenceDataset &data, TrainReport &report, bool final) {
  const auto train_in = data.train_inputs();
  auto train_pred = replay(net_, train_in);  // same pass as refresh_imaginary
  std::vector<Vector> test_pred;
  for (std::size_t t = data.train_length; t < data.size(); ++t)
    test_pred.push_back(network_forward(net_, data.inputs[t]));
  const double test = test_pred.empty() ? 0.0 : mse(test_pred, data.test_targets());
  if (!final) {
    report.test_mse_curve.push_back(test);
    return;
  }
  report.train_mse = mse(train_pred, data.train_targets());
  if (!test_pred.empty()) report.test_mse = test;
  report.train_predictions = std::move(train_pred);
  report.test_predictions = std::move(test_pred);
}

TrainReport Trainer::train(const SequenceDataset &data) {
  data.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.model = net_.signature_string();
  report.config = config_;
  const auto inputs = data.train_inputs();
  const auto targets = data.train_targets();
  for (int e = 0; e < config_.epochs; ++e) {
    report.epoch_loss.push_back(run_epoch(inputs, targets));
    if (config_.track_test_mse && data.train_length < data.size())
      evaluate(data, report, false);
  }
  // Refresh the densities under the final weights, drop the Jacobians, then
  // continue into the held-out window.
  sens_.zero();
  evaluate(data, report, true);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

TrainReport train(FTNetwork &net, const SequenceDataset &data, const TrainConfig &config) {
  Trainer trainer(net, config);
  return trainer.train(data);
}

}  // namespace ftkit
