// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ftkit/matrix.hpp"
#include "ftkit/network.hpp"

namespace ftkit {

/// Complex back-propagation (CBP).
///
/// The stimulus error travels down the stack at a single timestamp through
/// a (W^{l+1})^T. Time is handled forward: each layer carries the Jacobians
/// of its neurotrophin densities with respect to its own W and V, advanced
/// once per timestamp in the style of real-time recurrent learning. The
/// result is exact for a single-layer network. For deeper stacks the paths
/// by which a lower layer's weights reach an upper layer's densities over
/// time are not followed.

enum class GradientMode {
  Full,      // every dr(i)/dW(j,k), dr(i)/dV(j,h)
  Diagonal,  // only j == i; cheaper, approximate when a layer has >1 unit
};

std::string to_string(GradientMode mode);
GradientMode parse_gradient_mode(const std::string &text);

/// Forward-accumulated Jacobians of one layer's densities.
class LayerSensitivity {
 public:
  LayerSensitivity() = default;
  LayerSensitivity(std::size_t units, std::size_t inputs);

  std::size_t units() const noexcept { return units_; }
  std::size_t inputs() const noexcept { return inputs_; }

  /// d r(i) / d W(j, k)
  double &dW(std::size_t i, std::size_t j, std::size_t k) {
    return dr_dW_[(i * units_ + j) * inputs_ + k];
  }
  double dW(std::size_t i, std::size_t j, std::size_t k) const {
    return dr_dW_[(i * units_ + j) * inputs_ + k];
  }
  /// d r(i) / d V(j, h)
  double &dV(std::size_t i, std::size_t j, std::size_t h) {
    return dr_dV_[(i * units_ + j) * units_ + h];
  }
  double dV(std::size_t i, std::size_t j, std::size_t h) const {
    return dr_dV_[(i * units_ + j) * units_ + h];
  }

  std::span<const double> raw_dW() const noexcept { return dr_dW_; }
  std::span<const double> raw_dV() const noexcept { return dr_dV_; }

  void zero();
  bool all_zero() const;

 private:
  std::size_t units_ = 0;
  std::size_t inputs_ = 0;
  std::vector<double> dr_dW_;
  std::vector<double> dr_dV_;
};

class SensitivityState {
 public:
  SensitivityState() = default;
  SensitivityState(const FTNetwork &net, GradientMode mode);

  GradientMode mode() const noexcept { return mode_; }
  LayerSensitivity &layer(std::size_t l) { return layers_.at(l); }
  const LayerSensitivity &layer(std::size_t l) const { return layers_.at(l); }
  std::size_t depth() const noexcept { return layers_.size(); }

  void zero();
  bool all_zero() const;

  /// True when no entry with j != i is nonzero (always the case in
  /// diagonal mode).
  bool off_diagonal_zero() const;

 private:
  GradientMode mode_ = GradientMode::Full;
  std::vector<LayerSensitivity> layers_;
};

struct LayerGradient {
  Matrix gW;
  Matrix gV;
};

class GradientAccumulator {
 public:
  GradientAccumulator() = default;
  explicit GradientAccumulator(const FTNetwork &net);

  LayerGradient &layer(std::size_t l) { return layers_.at(l); }
  const LayerGradient &layer(std::size_t l) const { return layers_.at(l); }
  std::size_t depth() const noexcept { return layers_.size(); }

  void zero();
  bool all_finite() const;
  double norm() const;
  void scale(double factor);

 private:
  std::vector<LayerGradient> layers_;
};

/// Where each layer's r0 comes from at the start of an epoch.
enum class InitialState { Zeros, Configured };

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 100;
  GradientMode gradient_mode = GradientMode::Full;
  std::uint64_t seed = 0;
  InitialState r0 = InitialState::Zeros;
  /// Global gradient-norm clip; 0 disables clipping.
  double clip_norm = 0.0;
  /// Evaluate the held-out window after every epoch.
  bool track_test_mse = false;

  /// Throws std::invalid_argument unless learning_rate > 0, epochs >= 1 and
  /// clip_norm >= 0.
  void validate() const;
};

/// Input/target sequence with a training prefix [0, train_length) and an
/// evaluation suffix [train_length, size()).
struct SequenceDataset {
  std::vector<Vector> inputs;
  std::vector<Vector> targets;
  std::size_t train_length = 0;

  std::size_t size() const noexcept { return inputs.size(); }
  std::vector<Vector> train_inputs() const;
  std::vector<Vector> train_targets() const;
  std::vector<Vector> test_inputs() const;
  std::vector<Vector> test_targets() const;
  void validate() const;
};

struct TrainReport {
  std::string model;
  TrainConfig config;
  std::vector<double> epoch_loss;     // E before each epoch's update
  std::vector<double> test_mse_curve; // filled when track_test_mse
  double train_mse = 0.0;             // replay of the training window, final weights
  std::optional<double> test_mse;     // empty when there is no evaluation window
  std::vector<Vector> train_predictions;
  std::vector<Vector> test_predictions;
  double wall_clock_seconds = 0.0;
};

/// E = 1/2 sum_t sum_i (y_t(i) - target_t(i))^2.
double compute_loss(const std::vector<Vector> &preds, const std::vector<Vector> &targets);

/// y - target.
Vector output_delta(std::span<const double> y, std::span<const double> target);

/// Hidden delta at the same timestamp:
/// a (W^{l+1})^T (delta^{l+1} * sigma'(alpha^{l+1})).
Vector backprop_delta(const FTLayer &layer_above, std::span<const double> delta_above,
                      std::span<const double> alpha_above,
                      std::span<const double> beta_above);

/// Adds this timestamp's contribution sum_i delta(i) sigma'(alpha(i))
/// d alpha(i) / d(W, V) to `grad`. `sens` must still hold the previous
/// timestamp's Jacobians, so call this before advance_sensitivities.
void accumulate_gradients(const FTLayer &layer, std::span<const double> delta,
                          std::span<const double> s_prev, const LayerStep &step,
                          const LayerSensitivity &sens, LayerGradient &grad,
                          GradientMode mode);

/// Moves `sens` from d r_{t-1} to d r_t.
void advance_sensitivities(const FTLayer &layer, std::span<const double> s_prev,
                           const LayerStep &step, LayerSensitivity &sens,
                           GradientMode mode);

/// Full-sequence CBP gradient from the reset state. `loss` receives E.
GradientAccumulator cbp_gradient(FTNetwork &net, const std::vector<Vector> &inputs,
                                 const std::vector<Vector> &targets, GradientMode mode,
                                 double *loss = nullptr);

/// E of a full replay from the reset state.
double sequence_loss(FTNetwork &net, const std::vector<Vector> &inputs,
                     const std::vector<Vector> &targets);

/// Central differences of sequence_loss, one weight at a time, each on an
/// independent copy of `net`. Throws std::invalid_argument for h <= 0.
GradientAccumulator finite_difference_gradient(const FTNetwork &net,
                                               const std::vector<Vector> &inputs,
                                               const std::vector<Vector> &targets,
                                               double h = 1e-5);

/// W -= eta gW, V -= eta gV. Throws NumericOverflow on a non-finite gradient
/// and std::invalid_argument for eta <= 0.
void sgd_update(FTLayer &layer, const LayerGradient &grad, double eta);

struct GradientComparison {
  double max_rel_error_W = 0.0;
  double max_rel_error_V = 0.0;
  std::size_t compared = 0;  // entries above the magnitude floor
  double max_rel_error() const { return std::max(max_rel_error_W, max_rel_error_V); }
};

/// Max of |x - y| / max(|x|, |y|) over entries where max(|x|, |y|) > floor.
GradientComparison compare_gradients(const GradientAccumulator &x,
                                     const GradientAccumulator &y, double floor = 1e-8);

/// Owns the per-run sensitivity state for one network.
class Trainer {
 public:
  Trainer(FTNetwork &net, TrainConfig config);

  /// One full-sequence epoch: reset, forward with CBP accumulation, update.
  /// Returns E measured before the update.
  double run_epoch(const std::vector<Vector> &inputs, const std::vector<Vector> &targets);

  /// Runs every epoch, refreshes the densities over the training window and
  /// evaluates the held-out suffix.
  TrainReport train(const SequenceDataset &data);

  const SensitivityState &sensitivities() const noexcept { return sens_; }
  const GradientAccumulator &last_gradient() const noexcept { return grad_; }

 private:
  void evaluate(const SequenceDataset &data, TrainReport &report, bool final);

  FTNetwork &net_;
  TrainConfig config_;
  SensitivityState sens_;
  GradientAccumulator grad_;
  int epoch_ = 0;
};

TrainReport train(FTNetwork &net, const SequenceDataset &data, const TrainConfig &config);

}  // namespace ftkit
