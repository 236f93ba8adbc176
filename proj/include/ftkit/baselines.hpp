// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>

#include "ftkit/cbp.hpp"
#include "ftkit/matrix.hpp"

namespace ftkit {

enum class RealActivation { Tanh, Sigmoid };

double apply(RealActivation f, double x);
/// Derivative at the pre-activation x.
double derivative(RealActivation f, double x);
std::string to_string(RealActivation f);
RealActivation parse_real_activation(const std::string &text);

/// y = f(W x - theta)
struct MPNeuronLayer {
  Matrix W;
  Vector theta;
  RealActivation activation = RealActivation::Tanh;

  MPNeuronLayer() = default;
  MPNeuronLayer(std::size_t inputs, std::size_t units,
                RealActivation act = RealActivation::Tanh);

  std::size_t inputs() const noexcept { return W.cols(); }
  std::size_t units() const noexcept { return W.rows(); }
  void validate() const;
  /// Same scheme as FTNetwork::initialize; theta starts at zero.
  void initialize(std::uint64_t seed, double scale = 1.0);
};

Vector mp_forward(const MPNeuronLayer &layer, std::span<const double> x);

/// s_t = f(W x_t + V s_{t-1})
struct ElmanUnit {
  Matrix W;
  Matrix V;
  RealActivation activation = RealActivation::Tanh;
  Vector s_state;
  Vector s0;

  ElmanUnit() = default;
  ElmanUnit(std::size_t inputs, std::size_t units,
            RealActivation act = RealActivation::Tanh);

  std::size_t inputs() const noexcept { return W.cols(); }
  std::size_t units() const noexcept { return W.rows(); }
  void validate() const;
  void initialize(std::uint64_t seed, double scale = 1.0);
  void reset() { s_state = s0; }
};

Vector elman_step(ElmanUnit &unit, std::span<const double> x);

/// Full-batch gradient descent on E = 1/2 sum (y - target)^2 with the same
/// epoch structure as the FT trainer. The MP layer uses static
/// back-propagation. The Elman unit uses exact real-time recurrent learning
/// and outputs its hidden state.
TrainReport train_baseline(MPNeuronLayer &model, const SequenceDataset &data,
                           const TrainConfig &config);
TrainReport train_baseline(ElmanUnit &model, const SequenceDataset &data,
                           const TrainConfig &config);

}  // namespace ftkit
